"""Role-carrying bearer tokens with a keyed MAC.

A token is base64(canonical-JSON claims) + "." + hex MAC over those
exact bytes. Validation recomputes the MAC and also re-encodes the
payload, rejecting non-canonical base64; without that check, flips in
the unused trailing bits of the final base64 symbol would decode to the
same payload and slip through.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import hmac
import json
import time
from dataclasses import dataclass
from typing import Iterable

from ..errors import AuthError, UsageError


@dataclass(frozen=True)
class AccessToken:
    subject: str
    roles: tuple[str, ...]
    expires_at: float
    token: str


def _mac(payload: bytes, key: bytes) -> str:
    return hmac.new(key, payload, hashlib.sha256).hexdigest()


def issue_token(
    subject: str,
    roles: Iterable[str],
    ttl_s: float,
    key: bytes,
    now: float | None = None,
) -> AccessToken:
    if not key:
        raise UsageError("signing key must not be empty")
    if ttl_s < 0:
        raise UsageError("ttl must be non-negative")
    issued = time.time() if now is None else now
    role_tuple = tuple(roles)
    claims = {
        "subject": subject,
        "roles": sorted(role_tuple),
        "expires_at": issued + ttl_s,
    }
    payload = json.dumps(claims, sort_keys=True, separators=(",", ":")).encode()
    encoded = base64.urlsafe_b64encode(payload).decode()
    return AccessToken(
        subject=subject,
        roles=role_tuple,
        expires_at=claims["expires_at"],
        token=f"{encoded}.{_mac(payload, key)}",
    )


def validate_token(token: str, key: bytes, now: float | None = None) -> dict:
    """Return the claims if and only if the token is intact and current.

    Any alteration, in the payload, the separator, or the MAC, fails
    with an auth error, as does an expired token.
    """
    if not key:
        raise UsageError("signing key must not be empty")
    if not isinstance(token, str) or token.count(".") != 1:
        raise AuthError("malformed token")
    encoded, presented_mac = token.split(".")
    try:
        payload = base64.urlsafe_b64decode(encoded.encode())
    except (binascii.Error, ValueError):
        raise AuthError("malformed token") from None
    if base64.urlsafe_b64encode(payload).decode() != encoded:
        raise AuthError("malformed token")
    try:
        presented = presented_mac.encode("ascii")
    except UnicodeEncodeError:
        raise AuthError("token signature mismatch") from None
    if not hmac.compare_digest(_mac(payload, key).encode("ascii"), presented):
        raise AuthError("token signature mismatch")
    try:
        claims = json.loads(payload)
    except json.JSONDecodeError:
        raise AuthError("malformed token") from None
    if not isinstance(claims, dict) or "subject" not in claims or "expires_at" not in claims:
        raise AuthError("malformed token")
    moment = time.time() if now is None else now
    if moment >= claims["expires_at"]:
        raise AuthError("token expired")
    return claims


def require_role(claims: dict, *allowed: str):
    roles = claims.get("roles", [])
    if not any(role in roles for role in allowed):
        raise AuthError(f"requires one of roles: {', '.join(allowed)}")
