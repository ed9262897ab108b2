"""Uniformly sampled signals and their on-disk trace formats.

Waveform is the common currency between the cavity simulator, the receiver
chain, and the analysis helpers.  Records serialize to CSV (time column
plus one column per channel) and to a compact self-describing binary trace.
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np

TRACE_MAGIC = b"RBTR"
TRACE_VERSION = 1


@dataclass(frozen=True)
class Waveform:
    """Real-valued signal on a uniform time grid."""

    samples: np.ndarray
    dt: float
    unit: str = ""
    t0: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", arr)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if arr.ndim != 1:
            raise ValueError("waveform samples must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("waveform contains NaN or Inf")

    def __len__(self) -> int:
        return len(self.samples)

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    def slice_time(self, t_start: float, t_end: float) -> "Waveform":
        """Sub-waveform covering [t_start, t_end)."""
        i0 = max(0, int(np.ceil((t_start - self.t0) / self.dt - 1e-9)))
        i1 = min(len(self.samples),
                 int(np.ceil((t_end - self.t0) / self.dt - 1e-9)))
        if i1 <= i0:
            raise ValueError("empty time slice")
        return Waveform(self.samples[i0:i1], self.dt, self.unit,
                        self.t0 + i0 * self.dt)


@dataclass(frozen=True)
class WindowRecord:
    """One recording window: channels sharing a common time grid."""

    t0: float
    dt: float
    channels: dict[str, Waveform] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Waveform:
        return self.channels[name]

    def __contains__(self, name: str) -> bool:
        return name in self.channels

    @property
    def n_samples(self) -> int:
        return len(next(iter(self.channels.values())))


def _format_float(x: float) -> str:
    return repr(float(x))


def window_to_csv(window: WindowRecord, path) -> None:
    """Write a window as time_s plus one column per channel."""
    names = list(window.channels)
    times = next(iter(window.channels.values())).times()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s"] + names)
        columns = [window.channels[n].samples for n in names]
        for i, t in enumerate(times):
            writer.writerow([_format_float(t)]
                            + [_format_float(col[i]) for col in columns])


def rows_to_csv(path, header: list[str], rows) -> None:
    """Generic CSV table writer with shortest round-trip floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_float(v) if isinstance(v, float)
                             else v for v in row])


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def _unpack_str(buf: io.BufferedReader) -> str:
    (n,) = struct.unpack("<H", buf.read(2))
    return buf.read(n).decode("utf-8")


def windows_to_binary(windows, path) -> None:
    """Binary trace: magic, version, then per-window channel blocks."""
    with open(path, "wb") as fh:
        fh.write(TRACE_MAGIC)
        fh.write(struct.pack("<I", TRACE_VERSION))
        fh.write(struct.pack("<I", len(windows)))
        for win in windows:
            fh.write(struct.pack("<dd", win.t0, win.dt))
            fh.write(struct.pack("<I", len(win.channels)))
            for name, wf in win.channels.items():
                fh.write(_pack_str(name))
                fh.write(_pack_str(wf.unit))
                fh.write(struct.pack("<Q", len(wf.samples)))
            for wf in win.channels.values():
                fh.write(wf.samples.astype("<f8").tobytes())


def windows_from_binary(path):
    """Inverse of windows_to_binary."""
    with open(path, "rb") as fh:
        if fh.read(4) != TRACE_MAGIC:
            raise ValueError("not a trace file (bad magic)")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != TRACE_VERSION:
            raise ValueError(f"unsupported trace version {version}")
        (n_windows,) = struct.unpack("<I", fh.read(4))
        windows = []
        for _ in range(n_windows):
            t0, dt = struct.unpack("<dd", fh.read(16))
            (n_chan,) = struct.unpack("<I", fh.read(4))
            table = []
            for _ in range(n_chan):
                name = _unpack_str(fh)
                unit = _unpack_str(fh)
                (n,) = struct.unpack("<Q", fh.read(8))
                table.append((name, unit, n))
            channels = {}
            for name, unit, n in table:
                data = np.frombuffer(fh.read(8 * n), dtype="<f8")
                channels[name] = Waveform(data.copy(), dt, unit, t0)
            windows.append(WindowRecord(t0, dt, channels))
        return windows


def spectrum(waveform: Waveform, window: str = "hann"):
    """Windowed magnitude spectrum; returns (frequencies Hz, magnitude).

    The window reduces leakage from the finite record; magnitudes are the
    absolute rFFT values of the windowed samples.
    """
    x = waveform.samples
    if len(x) == 0:
        raise ValueError("empty waveform")
    if window == "hann":
        w = np.hanning(len(x))
    elif window == "rect":
        w = np.ones(len(x))
    else:
        raise ValueError(f"unknown window {window!r}")
    mag = np.abs(np.fft.rfft(x * w))
    freqs = np.fft.rfftfreq(len(x), waveform.dt)
    return freqs, mag
