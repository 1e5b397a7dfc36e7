"""
Parser for the machine-readable ATT&CK enterprise bundle (STIX 2.x JSON).
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, ValidationError

from ..utils.errors import ErrorCode, create_error
from .models import Corpus, ProcedureRecord, TacticRecord, TechniqueRecord
from .tactics import Tactic, sort_tactics

logger = logging.getLogger(__name__)

ENTERPRISE_DOMAIN = "enterprise-attack"
ATTACK_KILL_CHAIN = "mitre-attack"
ATTACK_SOURCE = "mitre-attack"
ACTOR_TYPES = {"intrusion-set", "malware", "tool", "campaign"}
ATTACK_SITE = "https://attack.mitre.org"


class ExternalReference(BaseModel):
    model_config = ConfigDict(extra="ignore")
    source_name: str
    external_id: Optional[str] = None
    url: Optional[str] = None


class KillChainPhase(BaseModel):
    model_config = ConfigDict(extra="ignore")
    kill_chain_name: str
    phase_name: str


class _StixObject(BaseModel):
    model_config = ConfigDict(extra="ignore")
    id: str
    type: str
    revoked: bool = False
    x_mitre_deprecated: bool = False
    x_mitre_domains: List[str] = []

    @property
    def active(self) -> bool:
        return not (self.revoked or self.x_mitre_deprecated)

    @property
    def in_enterprise(self) -> bool:
        # Objects without a domain list predate the field and are enterprise.
        return not self.x_mitre_domains or ENTERPRISE_DOMAIN in self.x_mitre_domains


class _AttackObject(_StixObject):
    name: str
    description: str = ""
    external_references: List[ExternalReference] = []

    def attack_reference(self) -> Optional[ExternalReference]:
        for ref in self.external_references:
            if ref.source_name == ATTACK_SOURCE and ref.external_id:
                return ref
        return None


class StixTactic(_AttackObject):
    x_mitre_shortname: str


class StixAttackPattern(_AttackObject):
    kill_chain_phases: List[KillChainPhase] = []
    x_mitre_is_subtechnique: bool = False


class StixActor(_StixObject):
    name: str


class StixRelationship(_StixObject):
    relationship_type: str
    source_ref: str
    target_ref: str
    description: Optional[str] = None


S = TypeVar("S", bound=_StixObject)


def _validate(model: Type[S], obj: Dict[str, Any]) -> S:
    try:
        return model.model_validate(obj)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        raise create_error(
            ErrorCode.BUNDLE_OBJECT_INVALID,
            object_id=obj.get("id", "<unknown>"),
            reason=f"{where}: {first.get('msg')}",
        ) from e


def technique_url(attack_id: str) -> str:
    """Page URL for a technique id such as T1574.001."""
    return f"{ATTACK_SITE}/techniques/{attack_id.replace('.', '/')}/"


def _load_objects(raw_bundle: bytes) -> List[Dict[str, Any]]:
    try:
        bundle = json.loads(raw_bundle)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise create_error(ErrorCode.BUNDLE_MALFORMED, reason=str(e)) from e

    if not isinstance(bundle, dict) or bundle.get("type") != "bundle":
        raise create_error(ErrorCode.BUNDLE_MALFORMED, reason="top-level object is not a STIX bundle")
    objects = bundle.get("objects")
    if not isinstance(objects, list):
        raise create_error(ErrorCode.BUNDLE_MALFORMED, reason="'objects' must be a list")
    if not objects:
        raise create_error(ErrorCode.BUNDLE_EMPTY)

    for position, obj in enumerate(objects):
        if not isinstance(obj, dict) or not isinstance(obj.get("id"), str) or not isinstance(obj.get("type"), str):
            raise create_error(
                ErrorCode.BUNDLE_OBJECT_INVALID,
                object_id=obj.get("id", f"<objects[{position}]>") if isinstance(obj, dict) else f"<objects[{position}]>",
                reason="every object needs string 'id' and 'type'",
            )
    return objects


def _parse_tactic(obj: Dict[str, Any]) -> Optional[TacticRecord]:
    stix = _validate(StixTactic, obj)
    if not stix.active or not stix.in_enterprise:
        return None
    ref = stix.attack_reference()
    if ref is None:
        raise create_error(ErrorCode.BUNDLE_OBJECT_INVALID, object_id=stix.id, reason="missing mitre-attack reference")
    try:
        tactic = Tactic.from_slug(stix.x_mitre_shortname)
    except ValueError:
        raise create_error(ErrorCode.UNKNOWN_KILL_CHAIN_PHASE, object_id=stix.id, phase=stix.x_mitre_shortname) from None
    return TacticRecord(
        stix_id=stix.id,
        attack_id=ref.external_id,
        tactic=tactic,
        name=stix.name,
        description=stix.description,
        url=ref.url or f"{ATTACK_SITE}/tactics/{ref.external_id}/",
    )


def _parse_technique(obj: Dict[str, Any]) -> Optional[TechniqueRecord]:
    stix = _validate(StixAttackPattern, obj)
    if not stix.active or not stix.in_enterprise:
        return None
    ref = stix.attack_reference()
    if ref is None:
        raise create_error(ErrorCode.BUNDLE_OBJECT_INVALID, object_id=stix.id, reason="missing mitre-attack reference")

    tactics = []
    for phase in stix.kill_chain_phases:
        if phase.kill_chain_name != ATTACK_KILL_CHAIN:
            raise create_error(
                ErrorCode.UNKNOWN_KILL_CHAIN_PHASE,
                object_id=stix.id,
                phase=f"{phase.kill_chain_name}:{phase.phase_name}",
            )
        try:
            tactics.append(Tactic.from_slug(phase.phase_name))
        except ValueError:
            raise create_error(ErrorCode.UNKNOWN_KILL_CHAIN_PHASE, object_id=stix.id, phase=phase.phase_name) from None

    return TechniqueRecord(
        stix_id=stix.id,
        attack_id=ref.external_id,
        name=stix.name,
        description=stix.description,
        url=ref.url or technique_url(ref.external_id),
        is_subtechnique=stix.x_mitre_is_subtechnique,
        tactics=tuple(sort_tactics(tactics)),
    )


def parse_snapshot(raw_bundle: bytes, version_tag: str) -> Corpus:
    """
    Parse an enterprise bundle into a Corpus.

    Revoked and deprecated objects (and relationships touching them) are
    excluded. Relationships are kept when they are 'uses' edges from a group,
    software or campaign to an active technique and carry a description.

    Raises:
        BundleParseError: empty or malformed bundle, malformed object (the
            message names its id), or an unknown kill-chain phase.
    """
    objects = _load_objects(raw_bundle)

    tactics: List[TacticRecord] = []
    techniques: Dict[str, TechniqueRecord] = {}
    actors: Dict[str, StixActor] = {}
    relationships: List[StixRelationship] = []

    for obj in objects:
        kind = obj["type"]
        if kind == "x-mitre-tactic":
            record = _parse_tactic(obj)
            if record:
                tactics.append(record)
        elif kind == "attack-pattern":
            record = _parse_technique(obj)
            if record:
                techniques[record.stix_id] = record
        elif kind in ACTOR_TYPES:
            actor = _validate(StixActor, obj)
            if actor.active:
                actors[actor.id] = actor
        elif kind == "relationship":
            rel = _validate(StixRelationship, obj)
            if rel.active and rel.relationship_type == "uses":
                relationships.append(rel)

    if not tactics and not techniques:
        raise create_error(ErrorCode.BUNDLE_EMPTY)

    procedures: List[ProcedureRecord] = []
    skipped = 0
    for rel in relationships:
        actor = actors.get(rel.source_ref)
        if actor is None or rel.target_ref not in techniques:
            continue
        if not rel.description or not rel.description.strip():
            skipped += 1
            continue
        procedures.append(ProcedureRecord(
            relationship_id=rel.id,
            actor_name=actor.name,
            actor_type=actor.type,
            technique_stix_id=rel.target_ref,
            description=rel.description,
        ))
    if skipped:
        logger.debug("Skipped %d procedure relationships without description", skipped)

    logger.info(
        "Parsed %s: %d tactics, %d techniques, %d procedure relationships",
        version_tag, len(tactics), len(techniques), len(procedures),
    )
    return Corpus(
        version_tag=version_tag,
        tactics=tuple(sorted(tactics, key=lambda t: t.attack_id)),
        techniques=tuple(sorted(techniques.values(), key=lambda t: t.attack_id)),
        procedures=tuple(sorted(procedures, key=lambda p: p.relationship_id)),
    )


def load_snapshot(path: Union[str, Path], version_tag: Optional[str] = None) -> Corpus:
    """Read a bundle file and parse it. The version tag defaults to the file stem."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Snapshot file not found: {path}")
    return parse_snapshot(path.read_bytes(), version_tag or path.stem)
