"""Helper utilities for the ttergm package."""

from __future__ import annotations

from datetime import UTC, datetime
import re
from typing import Any

import numpy as np

from .const import LABEL_STEP_WIDTH, UINT64_MAX

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child seed from a root seed and a path of integer keys.

    The same ``(seed, keys)`` always yields the same 64-bit value on every
    platform, which is what makes reruns byte-identical.
    """

    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(key) for key in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a PCG64 generator for the stream identified by ``(seed, keys)``."""

    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(key) for key in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def coerce_seed(value: Any) -> int:
    """Return ``value`` as an unsigned 64-bit seed or raise ``ValueError``."""

    seed = int(value)
    if seed < 0 or seed > UINT64_MAX:
        raise ValueError(f"seed {value!r} is not an unsigned 64-bit integer")
    return seed


def parse_timestamp(value: str) -> int:
    """Parse an ISO-8601 timestamp into UTC seconds.

    Naive timestamps are read as UTC, matching the public event archives.
    """

    parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=UTC)
    return int(parsed.timestamp())


def month_label(timestamp: int) -> str:
    """Return the calendar month (``YYYY-MM``) containing a UTC timestamp."""

    return datetime.fromtimestamp(timestamp, tz=UTC).strftime("%Y-%m")


def is_month_label(label: str) -> bool:
    """Return True when ``label`` looks like ``YYYY-MM``."""

    match = _MONTH_RE.match(label)
    return match is not None and 1 <= int(match.group(2)) <= 12


def shift_month(label: str, months: int) -> str:
    """Return the month label ``months`` calendar months after ``label``."""

    match = _MONTH_RE.match(label)
    if match is None:
        raise ValueError(f"{label!r} is not a month label")
    index = int(match.group(1)) * 12 + int(match.group(2)) - 1 + months
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


def month_range(start: int, end: int) -> list[str]:
    """Return every month label from the month of ``start`` to that of ``end``."""

    labels = [month_label(start)]
    last = month_label(end)
    while labels[-1] < last:
        labels.append(shift_month(labels[-1], 1))
    return labels


def label_width(horizon: int) -> int:
    """Return the step suffix width that keeps ``horizon`` generated labels ordered."""

    return max(LABEL_STEP_WIDTH, len(str(horizon)))


def next_label(label: str, step: int, width: int = LABEL_STEP_WIDTH) -> str:
    """Return the label of the snapshot ``step`` periods after ``label``.

    Month labels advance by calendar month; any other label gets a step suffix
    zero-padded to ``width`` so that labels keep increasing lexicographically.
    """

    if is_month_label(label):
        return shift_month(label, step)
    return f"{label}+{step:0{width}d}"
