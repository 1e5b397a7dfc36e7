"""
The 14 enterprise ATT&CK tactics and the phrase matching shared by the
procedure filter and the response keyword search.
"""

import re
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Pattern, Set, Tuple


class Tactic(str, Enum):
    """Enterprise ATT&CK tactics. Definition order is the report row order."""
    COLLECTION = "Collection"
    COMMAND_AND_CONTROL = "Command and Control"
    CREDENTIAL_ACCESS = "Credential Access"
    DEFENSE_EVASION = "Defense Evasion"
    DISCOVERY = "Discovery"
    EXECUTION = "Execution"
    EXFILTRATION = "Exfiltration"
    IMPACT = "Impact"
    INITIAL_ACCESS = "Initial Access"
    LATERAL_MOVEMENT = "Lateral Movement"
    PERSISTENCE = "Persistence"
    PRIVILEGE_ESCALATION = "Privilege Escalation"
    RECONNAISSANCE = "Reconnaissance"
    RESOURCE_DEVELOPMENT = "Resource Development"

    @property
    def canonical_name(self) -> str:
        return self.value

    @property
    def slug(self) -> str:
        return slugify(self.value)

    @property
    def shorthand_aliases(self) -> Tuple[str, ...]:
        return TACTIC_ALIASES.get(self, ())

    @property
    def position(self) -> int:
        return _POSITION[self]

    @classmethod
    def from_slug(cls, slug: str) -> "Tactic":
        """Resolve a kill-chain phase name such as 'defense-evasion'."""
        try:
            return _BY_SLUG[slug]
        except KeyError:
            raise ValueError(f"Unknown tactic slug: {slug}") from None

    @classmethod
    def from_name(cls, name: str) -> "Tactic":
        """Resolve a canonical name, case- and hyphen-insensitively."""
        key = slugify(name)
        if key in _BY_SLUG:
            return _BY_SLUG[key]
        for tactic, aliases in TACTIC_ALIASES.items():
            if name.strip().lower() in {a.lower() for a in aliases}:
                return tactic
        raise ValueError(f"Unknown tactic: {name}")

    def __str__(self) -> str:
        return self.value


# Only "C2" is registered; the result tables use it as a row label.
TACTIC_ALIASES: Dict[Tactic, Tuple[str, ...]] = {
    Tactic.COMMAND_AND_CONTROL: ("C2",),
}

TACTIC_ORDER: Tuple[Tactic, ...] = tuple(Tactic)
_POSITION = {t: i for i, t in enumerate(TACTIC_ORDER)}


def slugify(name: str) -> str:
    """Lowercase, whitespace and hyphen runs collapsed to single hyphens."""
    return re.sub(r"[\s\-]+", "-", name.strip().lower())


_BY_SLUG = {slugify(t.value): t for t in Tactic}


def sort_tactics(tactics: Iterable[Tactic]) -> List[Tactic]:
    """Deduplicate and order tactics by report row order."""
    return sorted(set(tactics), key=lambda t: _POSITION[t])


def phrase_pattern(phrase: str) -> Pattern[str]:
    """
    Whole-phrase, case-insensitive pattern for a tactic name or alias.

    Words may be separated by any run of whitespace or hyphens, and the
    phrase must not be flanked by ASCII letters or digits.
    """
    words = phrase.split()
    body = r"[\s\-]+".join(re.escape(w) for w in words)
    return re.compile(rf"(?<![A-Za-z0-9]){body}(?![A-Za-z0-9])", re.IGNORECASE)


@lru_cache(maxsize=None)
def _name_patterns() -> Tuple[Tuple[Tactic, Pattern[str]], ...]:
    return tuple((t, phrase_pattern(t.value)) for t in TACTIC_ORDER)


@lru_cache(maxsize=None)
def _alias_patterns() -> Tuple[Tuple[Tactic, Pattern[str]], ...]:
    return tuple(
        (t, phrase_pattern(alias))
        for t in TACTIC_ORDER
        for alias in t.shorthand_aliases
    )


def tactics_named_in(text: str, include_aliases: bool = False) -> Set[Tactic]:
    """All tactics whose canonical name (and optionally alias) occurs in text."""
    found = {t for t, pattern in _name_patterns() if pattern.search(text)}
    if include_aliases:
        found |= {t for t, pattern in _alias_patterns() if pattern.search(text)}
    return found


def contains_tactic_name(text: str) -> bool:
    """True iff any canonical tactic name occurs as a whole phrase. Aliases are ignored."""
    return any(pattern.search(text) for _, pattern in _name_patterns())
