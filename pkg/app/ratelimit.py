"""Shared rate limiter instance; sweeps are the expensive endpoint."""

from slowapi import Limiter
from slowapi.util import get_remote_address

limiter = Limiter(key_func=get_remote_address)

SWEEP_LIMIT = "2/minute"
BUILD_LIMIT = "10/minute"
DECODE_LIMIT = "30/minute"
