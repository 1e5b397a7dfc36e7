"""Tests for snapshot parsing, curation and the corpus artifacts."""
import json
import random

import numpy as np
import pytest
from pydantic import ValidationError

from ttprag.corpus import (
    DescriptionKind,
    LabeledDescription,
    Tactic,
    clean_text,
    corpus_stats,
    curate_finetune_set,
    curate_procedures,
    load_descriptions,
    load_procedures,
    load_snapshot,
    parse_snapshot,
    tactic_overlap_matrix,
    write_corpus_artifacts,
)
from ttprag.corpus.artifacts import read_overlap_csv
from ttprag.corpus.curation import procedure_id_for
from ttprag.corpus.tactics import TACTIC_ORDER, contains_tactic_name
from ttprag.utils.errors import ErrorCategory, ErrorCode

from tests.fixtures.assertions import assert_error_details, assert_pipeline_error
from tests.fixtures.attack_data import (
    N_DESCRIPTIONS,
    N_PROCEDURES,
    SUPPORT_TOTAL,
    TACTIC_NAMING_SENTENCES,
    TECHNIQUES,
    make_bundle,
    snapshot_objects,
    stix_actor,
    stix_tactic,
    stix_technique,
    stix_uses,
)


class TestParseSnapshot:
    """Bundle parsing and the exclusion rules."""

    def test_counts(self, corpus):
        assert corpus.version_tag == "test"
        assert len(corpus.tactics) == 14
        # Ten techniques plus the parent; the revoked one is gone.
        assert len(corpus.techniques) == len(TECHNIQUES) + 1
        assert "T1099" not in {t.attack_id for t in corpus.techniques}
        # 50 plain sentences plus 3 naming a tactic; revoked, deprecated and
        # description-less relationships are dropped.
        assert len(corpus.procedures) == N_PROCEDURES + len(TACTIC_NAMING_SENTENCES)

    def test_technique_tactics_and_url(self, corpus):
        by_id = {t.attack_id: t for t in corpus.techniques}
        dll = by_id["T1574.001"]
        assert dll.is_subtechnique
        assert dll.url == "https://attack.mitre.org/techniques/T1574/001/"
        assert dll.tactics == (Tactic.DEFENSE_EVASION, Tactic.PERSISTENCE, Tactic.PRIVILEGE_ESCALATION)
        assert not by_id["T1003"].is_subtechnique

    def test_actor_types_kept(self, corpus):
        okrum = [p for p in corpus.procedures if p.actor_name == "Okrum"]
        assert okrum and all(p.actor_type == "malware" for p in okrum)
        assert not any(p.actor_name == "Retired Group" for p in corpus.procedures)

    def test_object_order_does_not_matter(self, corpus):
        objects = snapshot_objects()
        random.Random(7).shuffle(objects)
        assert parse_snapshot(make_bundle(objects), "test") == corpus

    def test_load_snapshot_defaults_version_to_stem(self, snapshot_file):
        assert load_snapshot(snapshot_file).version_tag == "enterprise-attack-test"
        assert load_snapshot(snapshot_file, "14.1").version_tag == "14.1"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_snapshot(tmp_path / "nope.json")


class TestParseErrors:
    """Malformed bundles fail with a specific code."""

    def test_not_json(self):
        assert_pipeline_error(parse_snapshot, b"{not json", "x",
                              code=ErrorCode.BUNDLE_MALFORMED, category=ErrorCategory.CORPUS)

    def test_not_a_bundle(self):
        assert_pipeline_error(parse_snapshot, json.dumps({"type": "report"}).encode(), "x",
                              code=ErrorCode.BUNDLE_MALFORMED)

    def test_empty_objects(self):
        assert_pipeline_error(parse_snapshot, make_bundle([]), "x", code=ErrorCode.BUNDLE_EMPTY)

    def test_no_attack_objects(self):
        data = make_bundle([{"type": "identity", "id": "identity--x", "name": "x"}])
        assert_pipeline_error(parse_snapshot, data, "x", code=ErrorCode.BUNDLE_EMPTY)

    def test_object_without_type_names_its_id(self):
        data = make_bundle([stix_tactic(Tactic.IMPACT), {"id": "attack-pattern--broken"}])
        error = assert_pipeline_error(parse_snapshot, data, "x", code=ErrorCode.BUNDLE_OBJECT_INVALID)
        assert "attack-pattern--broken" in str(error)

    def test_technique_missing_name(self):
        bad = stix_technique("T1000", "Thing", (Tactic.IMPACT,))
        del bad["name"]
        error = assert_pipeline_error(parse_snapshot, make_bundle([bad]), "x",
                                      code=ErrorCode.BUNDLE_OBJECT_INVALID)
        assert_error_details(error, "object_id", "attack-pattern--T1000")

    def test_unknown_phase(self):
        bad = stix_technique("T1000", "Thing", (Tactic.IMPACT,))
        bad["kill_chain_phases"] = [{"kill_chain_name": "mitre-attack", "phase_name": "exploitation"}]
        assert_pipeline_error(parse_snapshot, make_bundle([bad]), "x",
                              code=ErrorCode.UNKNOWN_KILL_CHAIN_PHASE)

    def test_foreign_kill_chain(self):
        bad = stix_technique("T1000", "Thing", (Tactic.IMPACT,))
        bad["kill_chain_phases"] = [{"kill_chain_name": "lockheed", "phase_name": "impact"}]
        assert_pipeline_error(parse_snapshot, make_bundle([bad]), "x",
                              code=ErrorCode.UNKNOWN_KILL_CHAIN_PHASE)


class TestCleanText:
    def test_citations_and_references(self):
        raw = "APT1 used a tool.(Citation: Mandiant 2013) It worked [1][2]"
        assert clean_text(raw) == "APT1 used a tool. It worked"

    def test_markdown_links_and_html(self):
        raw = "[Mimikatz](https://attack.mitre.org/software/S0002) dumps <code>lsass</code> memory ."
        assert clean_text(raw) == "Mimikatz dumps lsass memory."


class TestCurateDescriptions:
    """The labeled description set."""

    def test_one_entry_per_tactic_and_technique(self, descriptions):
        assert len(descriptions) == N_DESCRIPTIONS
        assert [d.attack_id for d in descriptions] == sorted(d.attack_id for d in descriptions)

    def test_kinds_and_labels(self, descriptions):
        by_id = {d.attack_id: d for d in descriptions}
        assert by_id["TA0006"].kind == DescriptionKind.TACTIC
        assert by_id["TA0006"].tactic_labels == frozenset({Tactic.CREDENTIAL_ACCESS})
        assert by_id["T1574.001"].kind == DescriptionKind.SUBTECHNIQUE
        assert by_id["T1574"].kind == DescriptionKind.TECHNIQUE
        assert by_id["T1574"].tactic_labels == by_id["T1574.001"].tactic_labels

    def test_tactic_entry_needs_single_label(self):
        with pytest.raises(ValidationError):
            LabeledDescription(
                attack_id="TA0001",
                name="Initial Access",
                kind=DescriptionKind.TACTIC,
                description_text="text",
                tactic_labels=frozenset({Tactic.INITIAL_ACCESS, Tactic.IMPACT}),
                url="https://attack.mitre.org/tactics/TA0001/",
            )

    def test_technique_without_tactic(self):
        objects = [stix_tactic(Tactic.IMPACT), stix_technique("T1999", "Orphan", ())]
        corpus = parse_snapshot(make_bundle(objects), "x")
        error = assert_pipeline_error(curate_finetune_set, corpus, code=ErrorCode.TECHNIQUE_WITHOUT_TACTIC)
        assert "T1999" in str(error)


class TestCurateProcedures:
    """The filtered, labeled procedure set."""

    def test_filter_drops_tactic_naming_sentences(self, procedures):
        assert len(procedures) == N_PROCEDURES
        assert not any(contains_tactic_name(p.text) for p in procedures)
        texts = {p.text for p in procedures}
        for _, _, sentence in TACTIC_NAMING_SENTENCES:
            assert sentence not in texts

    def test_labels_come_from_technique(self, procedures):
        for p in procedures:
            assert p.gold_tactics == frozenset(TECHNIQUES[p.technique_attack_id][1])
        dll = [p for p in procedures if p.technique_attack_id == "T1574.001"]
        assert len(dll) == 5
        assert all(p.url == "https://attack.mitre.org/techniques/T1574/001/" for p in dll)

    def test_citations_stripped(self, procedures):
        apt39 = [p for p in procedures if p.actor_name == "APT39" and p.technique_attack_id == "T1003"]
        assert apt39[0].text == "APT39 has used Mimikatz and procdump to perform credential dumping of LSASS memory."
        assert not any("Citation" in p.text for p in procedures)

    def test_sorted_by_stable_ids(self, procedures):
        ids = [p.procedure_id for p in procedures]
        assert ids == sorted(ids)
        assert len(set(ids)) == len(ids)
        assert procedure_id_for("relationship--T1003-0") in ids

    def test_deterministic(self, corpus):
        assert curate_procedures(corpus) == curate_procedures(corpus)

    def test_dedupe_sentences(self):
        objects = snapshot_objects()
        actor = stix_actor("APT1")
        sentence = "APT1 has used PowerShell scripts to run commands on compromised hosts."
        objects.append(stix_uses("dup", actor, "T1059", sentence))
        corpus = parse_snapshot(make_bundle(objects), "x")

        assert len(curate_procedures(corpus)) == N_PROCEDURES + 1
        deduped = curate_procedures(corpus, dedupe_sentences=True)
        assert len(deduped) == N_PROCEDURES
        survivors = [p.procedure_id for p in deduped if p.text == sentence]
        candidates = [procedure_id_for("relationship--dup"), procedure_id_for("relationship--T1059-0")]
        assert survivors == [min(candidates)]


class TestStatsAndOverlap:
    def test_overlap_matrix(self, procedures):
        matrix = tactic_overlap_matrix(procedures)
        assert matrix.shape == (14, 14)
        assert (matrix == matrix.T).all()
        assert int(np.trace(matrix)) == SUPPORT_TOTAL
        p = TACTIC_ORDER.index(Tactic.PERSISTENCE)
        d = TACTIC_ORDER.index(Tactic.DEFENSE_EVASION)
        c = TACTIC_ORDER.index(Tactic.CREDENTIAL_ACCESS)
        assert matrix[p, d] == 5
        assert matrix[c, c] == 5
        assert matrix[c, p] == 0

    def test_stats(self, descriptions, procedures):
        stats = corpus_stats(descriptions, procedures, n_procedures_before_filter=53)
        assert stats.n_descriptions == N_DESCRIPTIONS
        assert stats.n_procedures == N_PROCEDURES
        assert stats.support_total == SUPPORT_TOTAL
        assert stats.per_tactic_support[Tactic.RECONNAISSANCE] == 0
        assert stats.per_tactic_support[Tactic.PRIVILEGE_ESCALATION] == 5


class TestArtifacts:
    def test_write_and_reload(self, tmp_path, descriptions, procedures):
        stats = corpus_stats(descriptions, procedures)
        matrix = tactic_overlap_matrix(procedures)
        paths = write_corpus_artifacts(tmp_path / "corpus", descriptions, procedures, stats, matrix)

        assert set(paths) == {"descriptions", "procedures", "overlap", "stats"}
        assert load_descriptions(paths["descriptions"]) == descriptions
        assert load_procedures(paths["procedures"]) == procedures
        assert (read_overlap_csv(paths["overlap"]) == matrix).all()
        saved = json.loads(paths["stats"].read_text())
        assert saved["support_total"] == SUPPORT_TOTAL
        assert saved["per_tactic_support"]["Credential Access"] == 5

    def test_artifacts_are_byte_stable(self, tmp_path, descriptions, procedures):
        stats = corpus_stats(descriptions, procedures)
        matrix = tactic_overlap_matrix(procedures)
        first = write_corpus_artifacts(tmp_path / "a", descriptions, procedures, stats, matrix)
        second = write_corpus_artifacts(tmp_path / "b", descriptions, procedures, stats, matrix)
        for name in first:
            assert first[name].read_bytes() == second[name].read_bytes()

    def test_malformed_line_is_reported(self, tmp_path, procedures):
        path = tmp_path / "procedures.jsonl"
        good = procedures[0].model_dump_json()
        path.write_text(good + "\n" + '{"procedure_id": "x"}\n')
        error = assert_pipeline_error(load_procedures, path, code=ErrorCode.ARTIFACT_MALFORMED)
        assert_error_details(error, "line", 2)
