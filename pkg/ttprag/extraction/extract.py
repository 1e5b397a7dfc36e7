"""
Keyword search of tactic names in free-text model responses.
"""

from typing import FrozenSet, Iterable

from ..corpus.tactics import Tactic, sort_tactics, tactics_named_in


def extract_tactics(response: str) -> FrozenSet[Tactic]:
    """
    Tactics named in a response.

    A tactic is predicted when its canonical name occurs as a whole phrase
    (case-insensitive, spaces and hyphens interchangeable) or one of its
    shorthand aliases occurs as a whole word. Paraphrases are not matched.
    """
    if not response:
        return frozenset()
    return frozenset(tactics_named_in(response, include_aliases=True))


def render_tactic_list(tactics: Iterable[Tactic]) -> str:
    """Canonical names in report row order, comma separated."""
    return ", ".join(t.value for t in sort_tactics(tactics))
