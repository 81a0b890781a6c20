from .app import (
    RequestError,
    WeightsUnavailable,
    create_app,
    null_inpaint,
    parse_request,
    serve,
)

__all__ = [
    "create_app",
    "null_inpaint",
    "parse_request",
    "serve",
    "RequestError",
    "WeightsUnavailable",
]
