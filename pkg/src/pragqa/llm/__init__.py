"""LLM transport, prompting, parsing and LLM-backed module implementations."""
from .client import (
    CacheKey,
    LLMClient,
    LLMConfig,
    LLMConfigError,
    LLMError,
    LLMTransportError,
    OfflineCacheMiss,
    ResponseCache,
    SlidingWindowRateLimiter,
)
from .parsing import ParseError

__all__ = [
    "CacheKey",
    "LLMClient",
    "LLMConfig",
    "LLMConfigError",
    "LLMError",
    "LLMTransportError",
    "OfflineCacheMiss",
    "ParseError",
    "ResponseCache",
    "SlidingWindowRateLimiter",
]
