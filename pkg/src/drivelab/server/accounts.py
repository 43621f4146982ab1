"""Account lifecycle: register with email-code confirmation, login with
bearer tokens, per-user consent profiles.

Passwords are salted scrypt hashes. Confirmation codes are 6 digits,
single-use, expire after 15 minutes, and are invalidated by 3 failed
attempts. The email "delivery" is a pluggable outbox whose default
writes a local spool file tests (and the CLI) can read back.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import re
import secrets
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from drivelab.clock import Clock
from drivelab.model.records import ConsentProfile

CODE_TTL_MS = 15 * 60 * 1000
CODE_MAX_ATTEMPTS = 3
TOKEN_TTL_MS = 24 * 60 * 60 * 1000
MIN_PASSWORD_LEN = 8

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")

_SCRYPT = {"n": 2**14, "r": 8, "p": 1}


class AccountError(Exception):
    """Codes: EMAIL_TAKEN, BAD_EMAIL, WEAK_PASSWORD, BAD_CODE,
    EXPIRED_CODE, BAD_CREDENTIALS, NOT_CONFIRMED, NOT_FOUND,
    UNAUTHENTICATED."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


def _hash_password(password: str, salt: bytes) -> str:
    return hashlib.scrypt(password.encode("utf-8"), salt=salt, **_SCRYPT).hex()


@dataclass
class PendingCode:
    code: str
    expires_ms: int
    attempts: int = 0
    invalidated: bool = False


@dataclass
class Account:
    user_id: str
    email: str
    password_hash: str
    salt: str
    state: str = "pending"  # pending | active
    pending: Optional[PendingCode] = None
    consent: ConsentProfile = field(default_factory=ConsentProfile)

    def to_dict(self) -> dict:
        return {
            "userId": self.user_id,
            "email": self.email,
            "passwordHash": self.password_hash,
            "salt": self.salt,
            "state": self.state,
            "consent": self.consent.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Account":
        return cls(
            user_id=d["userId"],
            email=d["email"],
            password_hash=d["passwordHash"],
            salt=d["salt"],
            state=d["state"],
            consent=ConsentProfile.from_dict(d.get("consent", {})),
        )


class AccountStore:
    def __init__(self, data_dir: str | Path, clock: Optional[Clock] = None,
                 outbox: Optional[Callable[[str, str], None]] = None):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock or Clock()
        self.outbox = outbox or self._spool_mail
        self._accounts: dict[str, Account] = {}  # by email
        self._tokens: dict[str, tuple[str, int]] = {}  # token -> (userId, expiry)
        self._lock = threading.Lock()
        self._load()

    # -- persistence --------------------------------------------------

    @property
    def _accounts_path(self) -> Path:
        return self.dir / "accounts.json"

    def _load(self) -> None:
        if self._accounts_path.exists():
            raw = json.loads(self._accounts_path.read_text())
            for d in raw:
                acct = Account.from_dict(d)
                self._accounts[acct.email] = acct

    def _save(self) -> None:
        tmp = self._accounts_path.with_suffix(".tmp")
        tmp.write_text(json.dumps([a.to_dict() for a in self._accounts.values()], indent=2))
        os.replace(tmp, self._accounts_path)

    def _spool_mail(self, email: str, code: str) -> None:
        spool = self.dir / "outbox"
        spool.mkdir(exist_ok=True)
        n = len(list(spool.glob("*.json")))
        (spool / f"{n:06d}.json").write_text(json.dumps({
            "to": email,
            "subject": "Your confirmation code",
            "code": code,
            "sentAt": self.clock.now_ms(),
        }, indent=2))

    # -- registration flow --------------------------------------------

    def register(self, email: str, password: str) -> Account:
        email = email.strip().lower()
        if not _EMAIL_RE.match(email):
            raise AccountError("BAD_EMAIL", email)
        if len(password) < MIN_PASSWORD_LEN:
            raise AccountError("WEAK_PASSWORD", f"password must be >= {MIN_PASSWORD_LEN} chars")
        with self._lock:
            existing = self._accounts.get(email)
            if existing is not None and existing.state == "active":
                raise AccountError("EMAIL_TAKEN", email)
            salt = os.urandom(16)
            code = f"{secrets.randbelow(10**6):06d}"
            account = Account(
                user_id=existing.user_id if existing else str(uuid.uuid4()),
                email=email,
                password_hash=_hash_password(password, salt),
                salt=salt.hex(),
                state="pending",
                pending=PendingCode(code=code, expires_ms=self.clock.now_ms() + CODE_TTL_MS),
            )
            self._accounts[email] = account
            self._save()
        self.outbox(email, code)
        return account

    def confirm(self, email: str, code: str) -> Account:
        email = email.strip().lower()
        with self._lock:
            account = self._accounts.get(email)
            if account is None:
                raise AccountError("NOT_FOUND", email)
            if account.state == "active":
                return account
            pending = account.pending
            if pending is None or pending.invalidated or self.clock.now_ms() > pending.expires_ms:
                raise AccountError("EXPIRED_CODE", "request a new code by registering again")
            if not hmac.compare_digest(pending.code, code.strip()):
                pending.attempts += 1
                if pending.attempts >= CODE_MAX_ATTEMPTS:
                    pending.invalidated = True
                raise AccountError("BAD_CODE", f"attempt {pending.attempts} of {CODE_MAX_ATTEMPTS}")
            account.state = "active"
            account.pending = None
            self._save()
            return account

    def login(self, email: str, password: str) -> str:
        email = email.strip().lower()
        with self._lock:
            account = self._accounts.get(email)
            if account is None:
                raise AccountError("BAD_CREDENTIALS")
            if not hmac.compare_digest(
                account.password_hash, _hash_password(password, bytes.fromhex(account.salt))
            ):
                raise AccountError("BAD_CREDENTIALS")
            if account.state != "active":
                raise AccountError("NOT_CONFIRMED", "confirm your email first")
            token = secrets.token_hex(32)
            self._tokens[token] = (account.user_id, self.clock.now_ms() + TOKEN_TTL_MS)
            return token

    def authenticate(self, token: Optional[str]) -> Account:
        if not token:
            raise AccountError("UNAUTHENTICATED", "missing bearer token")
        with self._lock:
            entry = self._tokens.get(token)
            if entry is None:
                raise AccountError("UNAUTHENTICATED", "unknown token")
            user_id, expiry = entry
            if self.clock.now_ms() > expiry:
                del self._tokens[token]
                raise AccountError("UNAUTHENTICATED", "token expired")
            for account in self._accounts.values():
                if account.user_id == user_id:
                    return account
        raise AccountError("UNAUTHENTICATED", "account gone")

    def set_consent(self, account: Account, profile: ConsentProfile) -> ConsentProfile:
        with self._lock:
            account.consent = profile
            self._save()
        return profile
