"""Clock correction, drift estimation, and arrival-jitter buffering.

Timestamps are integer nanoseconds end to end. The linear clock error
model maps a device-local timestamp to the reference timeline:

    corrected = local + offset + drift_rate * (local - last_sync)

with the drift term evaluated in double precision and rounded back to
whole nanoseconds. The offset itself is kept in float seconds so the
estimator can resolve below one nanosecond; only timestamps are forced
to integers.

The (offset, drift) pair is tracked by a two-state Kalman filter fed
with (local, reference) observation pairs. After every update the model
is re-anchored at the observation time, meaning the stored offset is
always "offset right now" and the drift term starts from zero again.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, UsageError

NS_PER_SEC = 1_000_000_000

MODALITIES = ("camera_series", "imu", "wearable", "detection")

MAX_DRIFT_RATE = 0.1


def to_ns(seconds: float) -> int:
    """Convert seconds to integer nanoseconds, rounding to nearest."""
    if not math.isfinite(seconds):
        raise UsageError("seconds value must be finite")
    return round(seconds * NS_PER_SEC)


def to_seconds(ns: int) -> float:
    return ns / NS_PER_SEC


# ---------------------------------------------------------------------------
# clock model


@dataclass(frozen=True)
class NoiseConfig:
    """Kalman noise settings, all in seconds-squared units.

    ``process_offset_var`` and ``process_drift_var`` are added per update
    step; they may be zero, which yields the recursive-least-squares
    limit. The measurement variance must stay strictly positive.
    """

    process_offset_var: float = 1e-6
    process_drift_var: float = 1e-12
    measurement_var: float = 1e-4

    def __post_init__(self):
        if self.measurement_var <= 0:
            raise ConfigError("measurement variance must be positive")
        if self.process_offset_var < 0 or self.process_drift_var < 0:
            raise ConfigError("process noise variances must be non-negative")


@dataclass(frozen=True)
class ClockModel:
    """Linear clock-error estimate for one device.

    offset      seconds to add to a local timestamp taken at ``last_sync``
    drift_rate  additional seconds of correction per elapsed second
    last_sync   anchor timestamp (ns) for the drift term
    covariance  2x2 uncertainty of (offset, drift), seconds^2 units
    """

    offset: float
    drift_rate: float
    last_sync: int
    covariance: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise DomainError("offset must be finite")
        if not abs(self.drift_rate) < MAX_DRIFT_RATE:
            raise DomainError("drift rate exceeds sanity bound of 0.1")
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (2, 2):
            raise ConfigError("covariance must be a 2x2 matrix")
        if not np.all(np.isfinite(cov)):
            raise ConfigError("covariance must be finite")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-9 * (1 + np.abs(cov).max())):
            raise ConfigError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov).min() < -1e-9 * (1 + np.abs(cov).max()):
            raise ConfigError("covariance must be positive semidefinite")
        cov.flags.writeable = False
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def identity(cls, anchor: int = 0) -> "ClockModel":
        """A no-op clock: corrected timestamps equal local ones."""
        return cls(0.0, 0.0, anchor, np.zeros((2, 2)))

    @classmethod
    def initial(
        cls,
        anchor: int,
        offset_var: float = 1.0,
        drift_var: float = 1e-4,
    ) -> "ClockModel":
        """A zero estimate with the given prior variances."""
        return cls(0.0, 0.0, anchor, np.diag([offset_var, drift_var]))

    def at_anchor(self, anchor: int) -> "ClockModel":
        """Re-express the same clock map with the drift term anchored at ``anchor``."""
        dt = (anchor - self.last_sync) / NS_PER_SEC
        f = np.array([[1.0, dt], [0.0, 1.0]])
        cov = f @ self.covariance @ f.T
        return ClockModel(self.offset + self.drift_rate * dt, self.drift_rate, anchor, cov)

    def inverse(self) -> "ClockModel":
        """The clock map from corrected back to local timestamps.

        Exact algebraic inverse of the forward map; the covariance is
        carried over unchanged as a first-order approximation.
        """
        anchor = self.last_sync + round(self.offset * NS_PER_SEC)
        drift = -self.drift_rate / (1.0 + self.drift_rate)
        return ClockModel(-self.offset, drift, anchor, self.covariance.copy())


def correct_timestamp(local_ts: int, model: ClockModel) -> int:
    """Map a device-local timestamp onto the reference timeline.

    Raises DomainError when the sample precedes the sync anchor, since
    the drift term is only calibrated forward from there.
    """
    if local_ts < model.last_sync:
        raise DomainError("sample precedes sync anchor")
    dt = (local_ts - model.last_sync) / NS_PER_SEC
    return local_ts + round((model.offset + model.drift_rate * dt) * NS_PER_SEC)


def kalman_update(
    model: ClockModel,
    observation: tuple[int, int],
    noise: NoiseConfig = NoiseConfig(),
) -> ClockModel:
    """Fold one (local, reference) timestamp pair into the clock estimate.

    Predicts the state forward to the observation time, applies a scalar
    measurement update in Joseph form, and returns a model re-anchored at
    the observation's local timestamp.
    """
    local, reference = observation
    if not (math.isfinite(local) and math.isfinite(reference)):
        raise DomainError("observation timestamps must be finite")
    if local < model.last_sync:
        raise DomainError("observation precedes sync anchor")

    dt = (local - model.last_sync) / NS_PER_SEC
    f = np.array([[1.0, dt], [0.0, 1.0]])
    q = np.diag([noise.process_offset_var, noise.process_drift_var])
    x = np.array([model.offset, model.drift_rate])
    p = f @ model.covariance @ f.T + q
    x = f @ x

    # measured discrepancy at the observation time, seconds
    z = (reference - local) / NS_PER_SEC
    h = np.array([1.0, 0.0])
    s = float(h @ p @ h) + noise.measurement_var
    k = (p @ h) / s
    x = x + k * (z - float(h @ x))
    ikh = np.eye(2) - np.outer(k, h)
    p = ikh @ p @ ikh.T + noise.measurement_var * np.outer(k, k)

    if not abs(x[1]) < MAX_DRIFT_RATE:
        raise DomainError("drift rate exceeds sanity bound of 0.1, rejecting fit")
    return ClockModel(float(x[0]), float(x[1]), local, p)


# ---------------------------------------------------------------------------
# jitter buffering


@dataclass(frozen=True)
class BufferPolicy:
    """Adaptive staleness bound: max(b_min, beta * arrival-interval std).

    b_min   floor on the buffer, ns
    beta    weight on the arrival-jitter estimate
    window  number of recent inter-arrival intervals used for the estimate
    """

    b_min: int
    beta: float
    window: int = 50

    def __post_init__(self):
        if self.b_min <= 0:
            raise ConfigError("b_min must be positive")
        if self.beta < 0:
            raise ConfigError("beta must be non-negative")
        if self.window < 2:
            raise ConfigError("window must be at least 2")


def buffer_size(policy: BufferPolicy, arrival_intervals: Sequence[int]) -> int:
    """Buffer (ns) for the observed inter-arrival intervals.

    Uses the sample standard deviation of the most recent ``window``
    intervals. With fewer than two intervals there is no jitter estimate
    and the floor applies.
    """
    recent = np.asarray(arrival_intervals[-policy.window:], dtype=float)
    if recent.size < 2:
        return policy.b_min
    sd = float(np.std(recent, ddof=1))
    return max(policy.b_min, round(policy.beta * sd))


# ---------------------------------------------------------------------------
# samples and streams


@dataclass(frozen=True)
class SensorSample:
    """One reading from one device.

    ``corrected_ts`` stays None until a clock model has been applied.
    ``location`` is an optional (lat, lon) pair.
    """

    device_id: str
    modality: str
    local_ts: int
    payload: tuple[float, ...]
    corrected_ts: int | None = None
    location: tuple[float, float] | None = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise UsageError(f"unknown modality {self.modality!r}")
        if not self.device_id:
            raise UsageError("device_id must be non-empty")
        object.__setattr__(self, "payload", tuple(float(v) for v in self.payload))

    def with_corrected(self, corrected_ts: int) -> "SensorSample":
        return replace(self, corrected_ts=int(corrected_ts))


@dataclass(frozen=True)
class StreamDescriptor:
    device_id: str
    modality: str
    nominal_rate_hz: float

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise UsageError(f"unknown modality {self.modality!r}")
        if not self.nominal_rate_hz > 0:
            raise ConfigError("nominal rate must be positive")

    @property
    def key(self) -> str:
        return f"{self.device_id}/{self.modality}"


@dataclass(frozen=True)
class SampleStream:
    """An ordered run of samples from a single (device, modality)."""

    descriptor: StreamDescriptor
    samples: tuple[SensorSample, ...]

    def __post_init__(self):
        samples = tuple(self.samples)
        arity = None
        prev = None
        for s in samples:
            if s.device_id != self.descriptor.device_id or s.modality != self.descriptor.modality:
                raise UsageError("sample does not belong to this stream")
            if arity is None:
                arity = len(s.payload)
            elif len(s.payload) != arity:
                raise UsageError("payload arity must be fixed within a stream")
            if prev is not None and s.local_ts < prev:
                raise UsageError("local timestamps must be non-decreasing")
            prev = s.local_ts
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def key(self) -> str:
        return self.descriptor.key

    def local_timestamps(self) -> np.ndarray:
        return np.array([s.local_ts for s in self.samples], dtype=np.int64)

    def corrected_timestamps(self) -> np.ndarray:
        ts = [s.corrected_ts for s in self.samples]
        if any(t is None for t in ts):
            raise UsageError(f"stream {self.key} has uncorrected samples")
        return np.array(ts, dtype=np.int64)

    def payload_matrix(self) -> np.ndarray:
        return np.array([s.payload for s in self.samples], dtype=float)

    def with_clock(self, model: ClockModel) -> "SampleStream":
        """Apply a clock model, filling every sample's corrected_ts."""
        corrected = tuple(
            s.with_corrected(correct_timestamp(s.local_ts, model)) for s in self.samples
        )
        return replace(self, samples=corrected)

    def shifted(self, delta_ns: int) -> "SampleStream":
        """Shift all corrected timestamps by delta_ns."""
        moved = tuple(
            s.with_corrected(s.corrected_ts + delta_ns) if s.corrected_ts is not None else s
            for s in self.samples
        )
        return replace(self, samples=moved)


# ---------------------------------------------------------------------------
# frame alignment


@dataclass(frozen=True)
class AlignedFrame:
    """Per-epoch snapshot: latest fresh sample of every stream, or None."""

    time: int
    slots: Mapping[str, SensorSample | None]


def align_streams(
    streams: Sequence[SampleStream],
    policy: BufferPolicy,
    epoch_ns: int,
) -> list[AlignedFrame]:
    """Resample corrected streams onto a fixed epoch grid.

    Frames are emitted at every multiple of ``epoch_ns`` covering the
    corrected time span of the inputs. A slot holds the stream's latest
    sample at or before the frame time, provided its age does not exceed
    the stream's adaptive buffer; otherwise the slot is None.
    """
    if epoch_ns <= 0:
        raise ConfigError("epoch must be positive")
    if not streams:
        raise UsageError("at least one stream required")
    per_stream: dict[str, tuple[np.ndarray, SampleStream]] = {}
    for stream in streams:
        if len(stream) == 0:
            raise UsageError(f"stream {stream.key} has no samples")
        ts = stream.corrected_timestamps()
        if stream.key in per_stream:
            raise UsageError(f"duplicate stream key {stream.key}")
        per_stream[stream.key] = (ts, stream)

    t_min = min(int(ts[0]) for ts, _ in per_stream.values())
    t_max = max(int(ts[-1]) for ts, _ in per_stream.values())
    start = -(-t_min // epoch_ns) * epoch_ns  # ceil to the epoch grid

    frames: list[AlignedFrame] = []
    for t in range(start, t_max + 1, epoch_ns):
        slots: dict[str, SensorSample | None] = {}
        for key, (ts, stream) in per_stream.items():
            idx = int(np.searchsorted(ts, t, side="right")) - 1
            if idx < 0:
                slots[key] = None
                continue
            lo = max(0, idx - policy.window)
            intervals = np.diff(ts[lo : idx + 1])
            limit = buffer_size(policy, intervals.tolist())
            age = t - int(ts[idx])
            slots[key] = stream.samples[idx] if age <= limit else None
        frames.append(AlignedFrame(time=t, slots=slots))
    return frames


# ---------------------------------------------------------------------------
# newline-delimited JSON wire format


def sample_to_record(sample: SensorSample) -> dict:
    record = {
        "device_id": sample.device_id,
        "modality": sample.modality,
        "local_ts_ns": sample.local_ts,
        "payload": list(sample.payload),
        "lat": sample.location[0] if sample.location else None,
        "lon": sample.location[1] if sample.location else None,
    }
    if sample.corrected_ts is not None:
        record["corrected_ts_ns"] = sample.corrected_ts
    return record


def sample_from_record(record: Mapping) -> SensorSample:
    try:
        location = None
        if record.get("lat") is not None and record.get("lon") is not None:
            location = (float(record["lat"]), float(record["lon"]))
        return SensorSample(
            device_id=record["device_id"],
            modality=record["modality"],
            local_ts=int(record["local_ts_ns"]),
            payload=tuple(record["payload"]),
            corrected_ts=(
                int(record["corrected_ts_ns"]) if "corrected_ts_ns" in record else None
            ),
            location=location,
        )
    except KeyError as exc:
        raise UsageError(f"sample record missing field {exc}") from exc


def write_samples_ndjson(samples: Iterable[SensorSample], fp: IO[str]) -> None:
    for sample in samples:
        fp.write(json.dumps(sample_to_record(sample), sort_keys=True))
        fp.write("\n")


def read_streams_ndjson(fp: IO[str]) -> dict[str, SampleStream]:
    """Group NDJSON sample records into streams keyed by device/modality."""
    grouped: dict[tuple[str, str], list[SensorSample]] = {}
    for line in fp:
        line = line.strip()
        if not line:
            continue
        sample = sample_from_record(json.loads(line))
        grouped.setdefault((sample.device_id, sample.modality), []).append(sample)
    streams: dict[str, SampleStream] = {}
    for (device_id, modality), samples in grouped.items():
        samples.sort(key=lambda s: s.local_ts)
        ts = np.array([s.local_ts for s in samples], dtype=np.int64)
        if len(ts) > 1:
            rate = NS_PER_SEC / float(np.median(np.diff(ts)))
        else:
            rate = 1.0
        descriptor = StreamDescriptor(device_id, modality, rate)
        streams[descriptor.key] = SampleStream(descriptor, tuple(samples))
    return streams
