"""Failure modes of the reasoning layer.

Pipeline callers should treat these as distinct: a BackendError is an
infrastructure problem worth retrying later, the others mean the model (or a
buggy rule backend) produced output we refuse to accept.
"""

from __future__ import annotations


class AgentError(RuntimeError):
    """Base class for everything raised by this subpackage."""


class BackendError(AgentError):
    """The completion call itself failed (network, auth, provider 5xx)."""


class SchemaError(AgentError):
    """The model reply did not parse or did not match the expected schema."""


class CoverageError(AgentError):
    """Interaction inference left some interactions unaccounted for.

    Every interaction order in the delta must appear in at least one
    inference's ``source``; silently dropping user actions is worse than
    admitting the model could not explain them.
    """


class AnchoringError(AgentError):
    """A produced report references workspace entities that do not exist,
    or fails the one-paragraph-per-main-frame contract."""
