"""endonav-client: remote-environment client for the endonav wire protocol."""

from .client import (
    PipeTransport,
    ProtocolError,
    RemoteEnv,
    RemoteEnvError,
    SubprocessTransport,
    TcpTransport,
    VersionMismatchError,
)

__version__ = "0.1.0"
