"""Device registry, version control, action queue, and capture store.

Every state-changing operation appends exactly one activity entry, and
the entry carries enough detail that replaying the log from empty
rebuilds the control-plane state. ``replay_log`` is that second,
independent accounting route; tests hold it equal to the live state.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import replace
from typing import Callable, Mapping, Sequence

from ..errors import AuthError, ConflictError, NotFoundError, UsageError, ValidationError
from ..timebase import ClockModel, SensorSample, correct_timestamp
from .store import MemoryLog
from .tokens import AccessToken, issue_token, require_role, validate_token
from .types import (
    DEVICE_STATUSES,
    ActionCommand,
    ActivityLogEntry,
    CaptureRecord,
    DeviceRecord,
    VersionSnapshot,
    canonical_json,
    format_timestamp,
    record_from_payload,
)

DEFAULT_DEVICE_TTL_S = 30 * 86_400
RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY_S = 0.1


class CoreServices:
    """The control plane: registration, versions, actions, capture.

    ``clock``, ``sleeper``, and ``id_factory`` are injectable so tests
    can pin time, observe backoff, and fix identifiers.
    """

    def __init__(
        self,
        key: bytes,
        log=None,
        clock: Callable[[], float] | None = None,
        sleeper: Callable[[float], None] | None = None,
        id_factory: Callable[[], str] | None = None,
        device_ttl_s: float = DEFAULT_DEVICE_TTL_S,
    ):
        if not key:
            raise UsageError("signing key must not be empty")
        self._key = key
        self._log = log if log is not None else MemoryLog()
        self._clock = clock or time.time
        self._sleep = sleeper or time.sleep
        self._new_id = id_factory or (lambda: str(uuid.uuid4()))
        self._device_ttl_s = device_ttl_s
        self._devices: dict[str, DeviceRecord] = {}
        self._configs: dict[str, str] = {}
        self._current_version: dict[str, str] = {}
        self._versions: dict[str, VersionSnapshot] = {}
        self._actions: dict[str, ActionCommand] = {}
        self._pending: dict[str, list[str]] = {}
        self._captures: dict[str, list[CaptureRecord]] = {}

    def now_s(self) -> float:
        return self._clock()

    # -- tokens ------------------------------------------------------

    def issue_token(self, subject: str, roles, ttl_s: float) -> AccessToken:
        return issue_token(subject, roles, ttl_s, self._key, now=self._clock())

    def validate(self, token: str) -> dict:
        return validate_token(token, self._key, now=self._clock())

    # -- log plumbing ------------------------------------------------

    def _record(self, stamp: str, activity_type: str, details: dict) -> ActivityLogEntry:
        entry = ActivityLogEntry(stamp, activity_type, details)
        self._log.append(entry.to_record())
        return entry

    def log_records(self) -> tuple[dict, ...]:
        return self._log.records()

    # -- registration and status -------------------------------------

    def register_device(self, payload: Mapping, admin_token: str) -> AccessToken:
        claims = self.validate(admin_token)
        require_role(claims, "admin")
        stamp = format_timestamp(self._clock())
        record = record_from_payload(payload, default_timestamp=stamp)
        if record.device_id in self._devices:
            raise ConflictError(f"device {record.device_id} is already registered")

        version_id = self._new_id()
        config = record.to_payload()
        self._devices[record.device_id] = record
        self._store_version(version_id, record.device_id, canonical_json(config), stamp)
        self._pending.setdefault(record.device_id, [])
        self._record(stamp, "register", {
            "device_id": record.device_id,
            "record": config,
            "version_id": version_id,
        })
        return self.issue_token(record.device_id, ("device",), self._device_ttl_s)

    def update_status(self, device_token: str, status: str, sync_ts) -> ActivityLogEntry:
        claims = self.validate(device_token)
        device_id = claims["subject"]
        record = self._devices.get(device_id)
        if record is None:
            raise AuthError(f"token subject {device_id!r} is not a registered device")
        if status not in DEVICE_STATUSES:
            raise ValidationError(f"unknown status {status!r}", fields=("status",))
        if sync_ts is None:
            sync_ts = self._clock()
        last_sync = sync_ts if isinstance(sync_ts, str) else format_timestamp(float(sync_ts))
        self._devices[device_id] = replace(record, status=status, last_sync_timestamp=last_sync)
        stamp = format_timestamp(self._clock())
        return self._record(stamp, "update", {
            "device_id": device_id,
            "status": status,
            "last_sync_timestamp": last_sync,
        })

    def device_record(self, device_id: str) -> DeviceRecord:
        record = self._devices.get(device_id)
        if record is None:
            raise NotFoundError(f"unknown device {device_id!r}")
        return record

    def list_devices(self) -> tuple[DeviceRecord, ...]:
        return tuple(self._devices[d] for d in sorted(self._devices))

    # -- versions ----------------------------------------------------

    def _store_version(self, version_id: str, device_id: str, config_json: str, stamp: str):
        self._versions[version_id] = VersionSnapshot(version_id, device_id, config_json, stamp)
        self._configs[device_id] = config_json
        self._current_version[device_id] = version_id

    def snapshot_config(self, device_id: str, config: Mapping) -> VersionSnapshot:
        self.device_record(device_id)
        stamp = format_timestamp(self._clock())
        version_id = self._new_id()
        blob = canonical_json(config)
        self._store_version(version_id, device_id, blob, stamp)
        self._record(stamp, "update", {
            "device_id": device_id,
            "version_id": version_id,
            "config": json.loads(blob),
        })
        return self._versions[version_id]

    def config_json(self, device_id: str) -> str:
        self.device_record(device_id)
        return self._configs[device_id]

    def version(self, version_id: str) -> VersionSnapshot:
        snapshot = self._versions.get(version_id)
        if snapshot is None:
            raise NotFoundError(f"unknown version {version_id!r}")
        return snapshot

    def rollback(self, device_id: str, target_version_id: str, admin_token: str) -> ActivityLogEntry:
        claims = self.validate(admin_token)
        require_role(claims, "admin")
        self.device_record(device_id)
        return self._rollback(device_id, target_version_id)

    def _rollback(self, device_id: str, target_version_id: str) -> ActivityLogEntry:
        snapshot = self.version(target_version_id)
        if snapshot.device_id != device_id:
            raise NotFoundError(
                f"version {target_version_id!r} does not belong to device {device_id!r}"
            )
        old_version_id = self._current_version[device_id]
        details = {
            "device_id": device_id,
            "old_version_id": old_version_id,
            "new_version_id": target_version_id,
        }
        if target_version_id == old_version_id:
            details["no_op"] = True
        else:
            self._configs[device_id] = snapshot.config_json
            self._current_version[device_id] = target_version_id
        stamp = format_timestamp(self._clock())
        return self._record(stamp, "rollback", details)

    # -- action queue ------------------------------------------------

    def enqueue_action(self, command: Mapping, token: str) -> str:
        claims = self.validate(token)
        require_role(claims, "admin", "app")
        missing = [f for f in ("device_id", "payload") if f not in command]
        if missing:
            raise ValidationError(
                f"action command missing: {', '.join(missing)}", fields=tuple(missing)
            )
        device_id = command["device_id"]
        record = self.device_record(device_id)
        if record.type != "actuator":
            raise ValidationError(
                f"target device {device_id!r} is not an actuator", fields=("device_id",)
            )
        action = ActionCommand(self._new_id(), device_id, dict(command["payload"]))
        self._actions[action.action_id] = action
        self._pending.setdefault(device_id, []).append(action.action_id)
        stamp = format_timestamp(self._clock())
        self._record(stamp, "action", {
            "action_id": action.action_id,
            "device_id": device_id,
            "state": "queued",
            "payload": action.payload,
        })
        return action.action_id

    def action(self, action_id: str) -> ActionCommand:
        command = self._actions.get(action_id)
        if command is None:
            raise NotFoundError(f"unknown action {action_id!r}")
        return command

    def process_actions(self, executor: Callable | None = None) -> list[ActionCommand]:
        """Run every pending action, strictly in order per device.

        The executor is called as ``executor(action, apply_config)``;
        it may apply intermediate configuration through the callback
        and raises to signal a device fault. A fault (or a target that
        stays offline through the retry schedule) rolls the device back
        to its pre-action version and marks the action rolled back.
        """
        processed: list[ActionCommand] = []
        for device_id in sorted(self._pending):
            queue = self._pending[device_id]
            while queue:
                action = self._actions[queue.pop(0)]
                self._execute(action, executor)
                processed.append(action)
        return processed

    def _transition(self, action: ActionCommand, state: str, extra: dict | None = None):
        action.transition(state)
        details = {"action_id": action.action_id, "device_id": action.device_id, "state": state}
        if extra:
            details.update(extra)
        self._record(format_timestamp(self._clock()), "action", details)

    def _execute(self, action: ActionCommand, executor: Callable | None):
        device_id = action.device_id
        pre_version = self._current_version[device_id]
        self._transition(action, "executing")

        online = self._devices[device_id].status != "offline"
        for attempt in range(RETRY_ATTEMPTS):
            if online:
                break
            if attempt < RETRY_ATTEMPTS - 1:
                self._sleep(RETRY_BASE_DELAY_S * 2**attempt)
            online = self._devices[device_id].status != "offline"
        if not online:
            self._rollback(device_id, pre_version)
            self._transition(action, "rolled_back", {"reason": "target offline"})
            return

        def apply_config(config: Mapping) -> VersionSnapshot:
            return self.snapshot_config(device_id, config)

        try:
            if executor is not None:
                executor(action, apply_config)
            self._transition(action, "committed")
        except Exception as fault:
            self._rollback(device_id, pre_version)
            self._transition(action, "rolled_back", {"reason": repr(fault)})

    # -- capture -----------------------------------------------------

    def capture_ingest(
        self,
        device_token: str,
        samples: Sequence[SensorSample],
        clock_model: ClockModel | None = None,
    ) -> tuple[CaptureRecord, ...]:
        claims = self.validate(device_token)
        device_id = claims["subject"]
        record = self._devices.get(device_id)
        if record is None:
            raise AuthError(f"token subject {device_id!r} is not a registered device")

        stored: list[CaptureRecord] = []
        for sample in samples:
            if sample.device_id != device_id:
                raise AuthError(
                    f"sample for {sample.device_id!r} submitted with token for {device_id!r}"
                )
            corrected = (
                correct_timestamp(sample.local_ts, clock_model)
                if clock_model is not None
                else sample.local_ts
            )
            stored.append(
                CaptureRecord(
                    capture_id=self._new_id(),
                    device_id=device_id,
                    modality=sample.modality,
                    local_ts=sample.local_ts,
                    corrected_ts=corrected,
                    payload=tuple(sample.payload),
                    location=(record.location.latitude, record.location.longitude),
                )
            )
        self._captures.setdefault(device_id, []).extend(stored)
        stamp = format_timestamp(self._clock())
        self._record(stamp, "data_access", {
            "device_id": device_id,
            "op": "ingest",
            "count": len(stored),
        })
        return tuple(stored)

    def query_captures(
        self, device_id: str, start_ns: int, end_ns: int, token: str
    ) -> tuple[CaptureRecord, ...]:
        """Samples for one device in [start_ns, end_ns), time-sorted."""
        claims = self.validate(token)
        if "admin" not in claims.get("roles", []) and "app" not in claims.get("roles", []):
            if claims["subject"] != device_id:
                raise AuthError("capture queries need the app or admin role")
        self.device_record(device_id)
        hits = [
            r for r in self._captures.get(device_id, [])
            if start_ns <= r.corrected_ts < end_ns
        ]
        hits.sort(key=lambda r: (r.corrected_ts, r.capture_id))
        stamp = format_timestamp(self._clock())
        self._record(stamp, "data_access", {
            "device_id": device_id,
            "op": "query",
            "count": len(hits),
        })
        return tuple(hits)

    # -- state for replay equality ------------------------------------

    def state(self) -> dict:
        return {
            "devices": {d: r.to_payload() for d, r in self._devices.items()},
            "configs": dict(self._configs),
            "current_version": dict(self._current_version),
            "versions": {
                v: {
                    "device_id": s.device_id,
                    "config_json": s.config_json,
                    "created_at": s.created_at,
                }
                for v, s in self._versions.items()
            },
            "actions": {a: c.state for a, c in self._actions.items()},
        }


def replay_log(records: Sequence[Mapping]) -> dict:
    """Rebuild control-plane state from activity records alone.

    Returns the same shape as ``CoreServices.state`` so the two can be
    compared directly. Data-access entries carry no control state and
    are skipped.
    """
    devices: dict[str, dict] = {}
    configs: dict[str, str] = {}
    current_version: dict[str, str] = {}
    versions: dict[str, dict] = {}
    actions: dict[str, str] = {}

    for record in records:
        details = record["details"]
        kind = record["activity_type"]
        if kind == "register":
            device_id = details["device_id"]
            devices[device_id] = dict(details["record"])
            blob = canonical_json(details["record"])
            versions[details["version_id"]] = {
                "device_id": device_id,
                "config_json": blob,
                "created_at": record["timestamp"],
            }
            configs[device_id] = blob
            current_version[device_id] = details["version_id"]
        elif kind == "update" and "status" in details:
            device_id = details["device_id"]
            devices[device_id] = dict(devices[device_id])
            devices[device_id]["status"] = details["status"]
            devices[device_id]["last_sync_timestamp"] = details["last_sync_timestamp"]
        elif kind == "update" and "version_id" in details:
            device_id = details["device_id"]
            blob = canonical_json(details["config"])
            versions[details["version_id"]] = {
                "device_id": device_id,
                "config_json": blob,
                "created_at": record["timestamp"],
            }
            configs[device_id] = blob
            current_version[device_id] = details["version_id"]
        elif kind == "rollback":
            if not details.get("no_op"):
                device_id = details["device_id"]
                target = details["new_version_id"]
                configs[device_id] = versions[target]["config_json"]
                current_version[device_id] = target
        elif kind == "action":
            actions[details["action_id"]] = details["state"]

    return {
        "devices": devices,
        "configs": configs,
        "current_version": current_version,
        "versions": versions,
        "actions": actions,
    }
