"""
Synthetic ATT&CK enterprise snapshot for tests.

Ten techniques with five procedure sentences each survive curation (50
procedures). Three more sentences name a tactic and are filtered out, and
a handful of revoked, deprecated or description-less objects exercise the
parser's exclusions. Every technique page lists the technique's tactics;
the Remote Services page additionally mentions Credential Access.
"""

import json
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ttprag.corpus.bundle import technique_url
from ttprag.corpus.tactics import Tactic, sort_tactics

T = Tactic

TACTIC_IDS: Dict[Tactic, str] = {
    T.RECONNAISSANCE: "TA0043",
    T.RESOURCE_DEVELOPMENT: "TA0042",
    T.INITIAL_ACCESS: "TA0001",
    T.EXECUTION: "TA0002",
    T.PERSISTENCE: "TA0003",
    T.PRIVILEGE_ESCALATION: "TA0004",
    T.DEFENSE_EVASION: "TA0005",
    T.CREDENTIAL_ACCESS: "TA0006",
    T.DISCOVERY: "TA0007",
    T.LATERAL_MOVEMENT: "TA0008",
    T.COLLECTION: "TA0009",
    T.EXFILTRATION: "TA0010",
    T.COMMAND_AND_CONTROL: "TA0011",
    T.IMPACT: "TA0040",
}

# attack_id -> (name, tactics, description, procedure template, actors)
TECHNIQUES: Dict[str, Tuple[str, Tuple[Tactic, ...], str, str, Tuple[str, ...]]] = {
    "T1003": (
        "OS Credential Dumping",
        (T.CREDENTIAL_ACCESS,),
        "Adversaries may attempt to dump credentials to obtain account login and password "
        "information. Mimikatz performs credential dumping to obtain account information.",
        "{actor} has used Mimikatz and procdump to perform credential dumping of LSASS memory.",
        ("MuddyWater", "APT39", "APT32", "Okrum", "OilRig"),
    ),
    "T1574.001": (
        "DLL Search Order Hijacking",
        (T.PERSISTENCE, T.PRIVILEGE_ESCALATION, T.DEFENSE_EVASION),
        "Adversaries may execute their own malicious payloads by hijacking the search order "
        "used to load DLLs.",
        "{actor} has performed DLL search order hijacking to execute their payload.",
        ("Threat Group-3390", "APT41", "menuPass", "BRONZE BUTLER", "Tonto Team"),
    ),
    "T1059": (
        "Command and Scripting Interpreter",
        (T.EXECUTION,),
        "Adversaries may abuse command and script interpreters to run commands, scripts or binaries.",
        "{actor} has used PowerShell scripts to run commands on compromised hosts.",
        ("APT1", "APT28", "APT29", "FIN7", "Kimsuky"),
    ),
    "T1071": (
        "Application Layer Protocol",
        (T.COMMAND_AND_CONTROL,),
        "Adversaries may communicate using application layer protocols to blend in with "
        "existing network traffic.",
        "{actor} has communicated with its servers over HTTPS web traffic.",
        ("APT1", "APT29", "Lazarus Group", "OilRig", "Turla"),
    ),
    "T1083": (
        "File and Directory Discovery",
        (T.DISCOVERY,),
        "Adversaries may enumerate files and directories or search in specific locations of "
        "a host or network share.",
        "{actor} has enumerated files and folders on local drives.",
        ("APT28", "APT32", "FIN7", "Kimsuky", "Lazarus Group"),
    ),
    "T1021": (
        "Remote Services",
        (T.LATERAL_MOVEMENT,),
        "Adversaries may use valid accounts to log into a service such as RDP or SMB. "
        "This usually follows Credential Access.",
        "{actor} has moved between hosts using RDP sessions and SMB shares.",
        ("APT39", "FIN7", "OilRig", "Turla", "Wizard Spider"),
    ),
    "T1560": (
        "Archive Collected Data",
        (T.COLLECTION,),
        "An adversary may compress and encrypt data that is gathered before it leaves the network.",
        "{actor} has compressed stolen documents into password protected RAR archives.",
        ("APT28", "APT39", "Kimsuky", "menuPass", "Turla"),
    ),
    "T1041": (
        "Exfiltration Over C2 Channel",
        (T.EXFILTRATION,),
        "Adversaries may steal data by sending it over an existing command channel.",
        "{actor} has sent archived documents to its server over the existing HTTP channel.",
        ("APT32", "Lazarus Group", "MuddyWater", "OilRig", "Wizard Spider"),
    ),
    "T1486": (
        "Data Encrypted for Impact",
        (T.IMPACT,),
        "Adversaries may encrypt data on target systems to interrupt availability of system "
        "and network resources.",
        "{actor} has deployed ransomware that encrypts files on network drives.",
        ("APT41", "FIN7", "Lazarus Group", "Sandworm Team", "Wizard Spider"),
    ),
    "T1566": (
        "Phishing",
        (T.INITIAL_ACCESS,),
        "Adversaries may send phishing messages to gain access to victim systems.",
        "{actor} has sent spearphishing emails with malicious Word attachments.",
        ("APT28", "APT29", "Kimsuky", "MuddyWater", "OilRig"),
    ),
}

# Technique without procedures, carried for the description set only.
PARENT_TECHNIQUE = (
    "T1574",
    "Hijack Execution Flow",
    (T.PERSISTENCE, T.PRIVILEGE_ESCALATION, T.DEFENSE_EVASION),
    "Adversaries may run their own payloads by hijacking the way operating systems run programs.",
)

# (actor, attack_id, sentence): each names a tactic and must be filtered out.
TACTIC_NAMING_SENTENCES = (
    ("APT28", "T1071", "APT28 has used HTTP for Command and Control traffic."),
    ("Turla", "T1083", "Turla performed discovery of files on the victim."),
    ("FIN7", "T1059", "FIN7 achieved persistence through scheduled scripts."),
)

MALWARE = {"Okrum"}

N_PROCEDURES = 50
N_DESCRIPTIONS = 14 + len(TECHNIQUES) + 1
SUPPORT_TOTAL = sum(5 * len(spec[1]) for spec in TECHNIQUES.values())
MUDDYWATER_T1003 = "MuddyWater has used Mimikatz and procdump to perform credential dumping of LSASS memory."


def _ref(attack_id: str, url: Optional[str] = None) -> List[Dict[str, Any]]:
    return [{"source_name": "mitre-attack", "external_id": attack_id, "url": url or technique_url(attack_id)}]


def stix_tactic(tactic: Tactic, attack_id: Optional[str] = None, **extra: Any) -> Dict[str, Any]:
    attack_id = attack_id or TACTIC_IDS[tactic]
    obj = {
        "type": "x-mitre-tactic",
        "id": f"x-mitre-tactic--{tactic.slug}",
        "name": tactic.value,
        "description": f"The adversary is trying to achieve the goals of {tactic.value}.",
        "x_mitre_shortname": tactic.slug,
        "x_mitre_domains": ["enterprise-attack"],
        "external_references": _ref(attack_id, f"https://attack.mitre.org/tactics/{attack_id}/"),
    }
    obj.update(extra)
    return obj


def stix_technique(
    attack_id: str,
    name: str,
    tactics: Sequence[Tactic],
    description: str = "",
    **extra: Any,
) -> Dict[str, Any]:
    obj = {
        "type": "attack-pattern",
        "id": f"attack-pattern--{attack_id}",
        "name": name,
        "description": description or f"Description of {name}.",
        "kill_chain_phases": [{"kill_chain_name": "mitre-attack", "phase_name": t.slug} for t in tactics],
        "x_mitre_is_subtechnique": "." in attack_id,
        "x_mitre_domains": ["enterprise-attack"],
        "external_references": _ref(attack_id),
    }
    obj.update(extra)
    return obj


def stix_actor(name: str, kind: str = "intrusion-set", **extra: Any) -> Dict[str, Any]:
    obj = {"type": kind, "id": f"{kind}--{name.replace(' ', '-')}", "name": name}
    obj.update(extra)
    return obj


def stix_uses(rel_id: str, actor: Dict[str, Any], attack_id: str, description: Optional[str],
              **extra: Any) -> Dict[str, Any]:
    obj = {
        "type": "relationship",
        "id": f"relationship--{rel_id}",
        "relationship_type": "uses",
        "source_ref": actor["id"],
        "target_ref": f"attack-pattern--{attack_id}",
    }
    if description is not None:
        obj["description"] = description
    obj.update(extra)
    return obj


def make_bundle(objects: Sequence[Dict[str, Any]]) -> bytes:
    return json.dumps({"type": "bundle", "id": "bundle--test", "objects": list(objects)}).encode("utf-8")


def snapshot_objects() -> List[Dict[str, Any]]:
    """All objects of the synthetic snapshot."""
    objects: List[Dict[str, Any]] = [{"type": "identity", "id": "identity--mitre", "name": "The MITRE Corporation"}]
    objects += [stix_tactic(t) for t in Tactic]

    for attack_id, (name, tactics, description, _, _) in TECHNIQUES.items():
        objects.append(stix_technique(attack_id, name, tactics, description))
    parent_id, parent_name, parent_tactics, parent_description = PARENT_TECHNIQUE
    objects.append(stix_technique(parent_id, parent_name, parent_tactics, parent_description))
    objects.append(stix_technique("T1099", "Timestomp", (T.DEFENSE_EVASION,), revoked=True))

    actors: Dict[str, Dict[str, Any]] = {}
    for _, _, _, _, names in TECHNIQUES.values():
        for actor_name in names:
            kind = "malware" if actor_name in MALWARE else "intrusion-set"
            actors.setdefault(actor_name, stix_actor(actor_name, kind))
    retired = stix_actor("Retired Group", x_mitre_deprecated=True)
    objects += list(actors.values()) + [retired]

    for attack_id, (_, _, _, template, names) in TECHNIQUES.items():
        for j, actor_name in enumerate(names):
            sentence = template.format(actor=actor_name)
            if j == 1:
                sentence += f" (Citation: {actor_name} Report 2023)"
            objects.append(stix_uses(f"{attack_id}-{j}", actors[actor_name], attack_id, sentence))

    for k, (actor_name, attack_id, sentence) in enumerate(TACTIC_NAMING_SENTENCES):
        objects.append(stix_uses(f"named-{k}", actors[actor_name], attack_id, sentence))

    objects.append(stix_uses("no-description", actors["APT1"], "T1566", None))
    objects.append(stix_uses("revoked", actors["APT1"], "T1566", "APT1 has sent phishing links.", revoked=True))
    objects.append(stix_uses("to-revoked", actors["APT1"], "T1099", "APT1 has modified file timestamps."))
    objects.append(stix_uses("from-retired", retired, "T1566", "Retired Group has sent malicious links."))
    return objects


def snapshot_bytes() -> bytes:
    return make_bundle(snapshot_objects())


def technique_page(attack_id: str) -> str:
    """Normalized page text of a technique: name, id, tactic list and description."""
    name, tactics, description, _, _ = TECHNIQUES[attack_id]
    return "\n".join([
        name,
        f"ID: {attack_id}",
        "Tactics: " + ", ".join(t.value for t in sort_tactics(tactics)),
        description,
    ])


def technique_html(attack_id: str) -> str:
    """A page whose visible text normalizes to technique_page(attack_id)."""
    name, tactics, description, _, _ = TECHNIQUES[attack_id]
    tactic_list = ", ".join(t.value for t in sort_tactics(tactics))
    return (
        "<html><head><style>body { color: red; }</style>"
        "<script>var tactic = 'Impact';</script></head><body>"
        "<nav><a href='/'>Home</a> Exfiltration menu</nav>"
        f"<h1>{name}</h1><div>ID: {attack_id}</div>"
        f"<div>Tactics: {tactic_list}</div><p>{description}</p>"
        "</body></html>"
    )
