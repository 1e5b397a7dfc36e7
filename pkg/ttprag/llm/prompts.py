"""
Prompt templates.

Three variants are rendered: the tactic question without context, the
tactic question with a Relevant Context block, and the open question with
a Relevant Context block. The whole rendered text is sent as one user
message.
"""

import re
from enum import Enum
from typing import Optional

from ..corpus.models import ProcedureExample
from ..retrieval.models import AssembledContext, RetrievalMode
from ..utils.errors import ErrorCode, create_error

CONTEXT_HEADER = "Relevant Context: "
QUESTION_MARKER = "\n\nQuestion: "

_EXPERT = "You are a cybersecurity expert."
_CERTAINTY = "Please only respond with the MITRE ATT&CK tactics you are certain about."
_TACTIC_QUESTION = (
    "Knowing that <<{procedure}>>, what MITRE ATT&CK tactics will a cyber "
    "adversary achieve with this technique?"
)
_OPEN_QUESTION = "Knowing that <<{procedure}>>, what will a cyber adversary achieve with this technique?"
_CONTEXT_LEAD = (
    f"{_EXPERT} Consider the relevant context provided below and answer the question."
    f"\n\n{CONTEXT_HEADER}{{context}}"
)


class PromptVariant(str, Enum):
    SPECIFIC_NO_CONTEXT = "specific-no-context"
    SPECIFIC_WITH_CONTEXT = "specific-with-context"
    GENERIC_WITH_CONTEXT = "generic-with-context"

    @property
    def needs_context(self) -> bool:
        return self != PromptVariant.SPECIFIC_NO_CONTEXT


TEMPLATES = {
    PromptVariant.SPECIFIC_NO_CONTEXT: f"{_EXPERT}\n\n{_TACTIC_QUESTION}\n\n{_CERTAINTY}",
    PromptVariant.SPECIFIC_WITH_CONTEXT: f"{_CONTEXT_LEAD}{QUESTION_MARKER}{_TACTIC_QUESTION}\n\n{_CERTAINTY}",
    PromptVariant.GENERIC_WITH_CONTEXT: f"{_CONTEXT_LEAD}{QUESTION_MARKER}{_OPEN_QUESTION}",
}

_PLACEHOLDER = re.compile(r"\{(procedure|context)\}")


def render_template(template: str, procedure: str, context: str = "") -> str:
    """Fill {procedure} and {context} in one pass; inserted text is never rescanned."""
    values = {"procedure": procedure, "context": context}
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)


def build_prompt(
    variant: PromptVariant,
    procedure: ProcedureExample,
    context: Optional[AssembledContext] = None,
) -> str:
    """
    Render the prompt for one procedure.

    Context chunks are joined by blank lines in rank order. A retrieval that
    found no page text still renders the block, empty.

    Raises:
        PromptError: a with-context variant given no retrieved context, or the
            no-context variant given retrieved chunks.
    """
    variant = PromptVariant(variant)
    has_retrieval = context is not None and context.mode != RetrievalMode.PROMPT_ONLY
    if variant.needs_context and not has_retrieval:
        raise create_error(ErrorCode.PROMPT_CONTEXT_MISSING, variant=variant.value)
    if not variant.needs_context and context is not None and context.chunks:
        raise create_error(ErrorCode.PROMPT_CONTEXT_UNEXPECTED, variant=variant.value)

    context_text = context.text if has_retrieval else ""
    return render_template(TEMPLATES[variant], procedure.text, context_text)


def relevant_context_of(prompt: str) -> str:
    """
    The Relevant Context block of a rendered prompt, or "" if it has none.

    The block runs from the header to the last question marker; procedure
    texts never contain a blank line, so the last marker is the template's.
    """
    start = prompt.find(CONTEXT_HEADER)
    if start < 0:
        return ""
    start += len(CONTEXT_HEADER)
    end = prompt.rfind(QUESTION_MARKER)
    if end < start:
        return prompt[start:]
    return prompt[start:end]
