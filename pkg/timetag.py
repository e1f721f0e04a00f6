"""
Time-tag streams: GQTT/CSV parsing, pulse-resolved coincidence counting and
correlation estimates with Poisson errors.
"""
import io
import os
import math
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations
from typing import BinaryIO, Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from config import GQTT_MAGIC, N_CHANNELS, REORDER_TOL_PS, CHUNK_RECORDS
from models import (
    AnalysisConfig, CoincidenceSet, JacobiPoint, Selection, StreamFormat,
    FormatError, OrderError, ChannelError, NoNormalization, DomainError,
)
from stats import zero_count_upper_limit

logger = logging.getLogger(__name__)

RECORD_DTYPE = np.dtype([("channel", "u1"), ("t_ps", "<u8")])
HEADER_SIZE = len(GQTT_MAGIC) + 1
CSV_HEADER = "channel,t_ps"
CHANNEL_PAIRS = ((0, 1), (0, 2), (1, 2))
_INT64_MAX = np.iinfo(np.int64).max
_PULSE_MIN = np.iinfo(np.int64).min
_PULSE_MAX = np.iinfo(np.int64).max

Source = Union[bytes, bytearray, str, os.PathLike, BinaryIO]


class ClickRecord(NamedTuple):
    channel: int
    t_ps: int


@dataclass(frozen=True)
class ClickStream:
    """Sorted detector clicks as parallel channel/time arrays."""
    channels: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    n_channels: int = N_CHANNELS

    def __post_init__(self):
        object.__setattr__(self, "channels", np.asarray(self.channels, dtype=np.uint8))
        object.__setattr__(self, "times", np.asarray(self.times, dtype=np.int64))
        if self.channels.shape != self.times.shape:
            raise FormatError("channel and time arrays differ in length")

    def __len__(self) -> int:
        return int(self.times.size)

    @classmethod
    def empty(cls, n_channels: int = N_CHANNELS) -> "ClickStream":
        return cls(np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.int64), n_channels)

    @classmethod
    def from_records(cls, records, n_channels: int = N_CHANNELS) -> "ClickStream":
        """Build a validated, sorted stream from (channel, t_ps) pairs."""
        records = list(records)
        if not records:
            return cls.empty(n_channels)
        channels = np.array([int(c) for c, _ in records], dtype=np.int64)
        times = np.array([int(t) for _, t in records], dtype=np.int64)
        return _finalize(channels, times, n_channels, REORDER_TOL_PS)

    def records(self) -> List[ClickRecord]:
        return [ClickRecord(int(c), int(t)) for c, t in zip(self.channels, self.times)]

    def relabel(self, mapping: Tuple[int, int, int]) -> "ClickStream":
        """Stream with channel c renamed to mapping[c], re-sorted."""
        lookup = np.asarray(mapping, dtype=np.int64)
        return _finalize(lookup[self.channels.astype(np.int64)], self.times.copy(), self.n_channels, 0)


def concat_streams(streams: List[ClickStream]) -> ClickStream:
    """Merge several streams into one time-ordered stream."""
    if not streams:
        return ClickStream.empty()
    channels = np.concatenate([s.channels for s in streams])
    times = np.concatenate([s.times for s in streams])
    order = np.lexsort((channels, times))
    return ClickStream(channels[order], times[order], streams[0].n_channels)


# Parsing and writing

def _read_source(source: Source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as handle:
            return handle.read()
    return source.read()


def _check_channels(channels: np.ndarray, n_channels: int):
    limit = min(n_channels, N_CHANNELS)
    bad = np.flatnonzero((channels < 0) | (channels >= limit))
    if bad.size:
        i = int(bad[0])
        raise ChannelError(f"record {i} has channel {int(channels[i])}, expected 0..{limit - 1}")


def _finalize(channels: np.ndarray, times: np.ndarray, n_channels: int, reorder_tol: int) -> ClickStream:
    """Validate channels and ordering, then sort by (time, channel)."""
    _check_channels(channels, n_channels)
    if times.size:
        if times.min() < 0:
            raise FormatError("negative time tag")
        lag = np.maximum.accumulate(times) - times
        late = np.flatnonzero(lag > reorder_tol)
        if late.size:
            i = int(late[0])
            raise OrderError(f"record {i} at {int(times[i])} ps arrives {int(lag[i])} ps late "
                             f"(reorder tolerance {reorder_tol} ps)")
    order = np.lexsort((channels, times))
    return ClickStream(channels[order], times[order], n_channels)


def _parse_header(data: bytes) -> int:
    if len(data) < HEADER_SIZE or data[:len(GQTT_MAGIC)] != GQTT_MAGIC:
        raise FormatError("missing GQTT01 magic")
    n_channels = data[len(GQTT_MAGIC)]
    if n_channels == 0:
        raise FormatError("GQTT header declares zero channels")
    return n_channels


def _decode_records(payload: bytes) -> Tuple[np.ndarray, np.ndarray]:
    if len(payload) % RECORD_DTYPE.itemsize:
        raise FormatError(f"payload of {len(payload)} bytes is not a whole number of "
                          f"{RECORD_DTYPE.itemsize}-byte records")
    rec = np.frombuffer(payload, dtype=RECORD_DTYPE)
    times = rec["t_ps"]
    if times.size and int(times.max()) > _INT64_MAX:
        raise FormatError("time tag exceeds the signed 64-bit range")
    return rec["channel"].astype(np.int64), times.astype(np.int64)


def _parse_csv(data: bytes) -> Tuple[np.ndarray, np.ndarray]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"CSV stream is not UTF-8: {e}")
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith("#")]
    if not lines or lines[0].replace(" ", "").lower() != CSV_HEADER:
        raise FormatError(f"CSV stream must start with the header '{CSV_HEADER}'")
    rows = lines[1:]
    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    try:
        table = np.loadtxt(rows, delimiter=",", dtype=np.int64, ndmin=2)
    except ValueError as e:
        raise FormatError(f"bad CSV record: {e}")
    if table.shape[1] != 2:
        raise FormatError(f"CSV records need 2 fields, found {table.shape[1]}")
    return table[:, 0], table[:, 1]


def parse_stream(source: Source, fmt: StreamFormat = StreamFormat.BINARY,
                 reorder_tol: int = REORDER_TOL_PS) -> ClickStream:
    """
    Parse a GQTT binary or CSV click stream.

    Records may be out of order by at most reorder_tol picoseconds; the result is
    sorted by time with ties broken by channel.
    """
    data = _read_source(source)
    fmt = StreamFormat(fmt)
    if fmt == StreamFormat.BINARY:
        n_channels = _parse_header(data)
        channels, times = _decode_records(data[HEADER_SIZE:])
    else:
        n_channels = N_CHANNELS
        channels, times = _parse_csv(data)
    stream = _finalize(channels, times, n_channels, reorder_tol)
    logger.info(f"Parsed {len(stream)} clicks ({fmt.value})")
    return stream


def iter_gqtt_chunks(source: Union[str, os.PathLike, BinaryIO], chunk_records: int = CHUNK_RECORDS,
                     reorder_tol: int = REORDER_TOL_PS) -> Iterator[ClickStream]:
    """
    Read a GQTT stream in bounded memory, yielding sorted chunks in global time order.

    Records inside the reorder tolerance of the newest time seen are held back
    until the next chunk so that late arrivals can still be merged.
    """
    handle = open(source, "rb") if isinstance(source, (str, os.PathLike)) else source
    try:
        n_channels = _parse_header(handle.read(HEADER_SIZE))
        carry_ch = np.zeros(0, dtype=np.int64)
        carry_t = np.zeros(0, dtype=np.int64)
        newest = -1
        emitted_up_to = -1
        while True:
            payload = handle.read(chunk_records * RECORD_DTYPE.itemsize)
            if not payload:
                break
            channels, times = _decode_records(payload)
            _check_channels(channels, n_channels)
            if times.size:
                running = np.maximum.accumulate(np.maximum(times, newest))
                lag = running - times
                if np.any(lag > reorder_tol) or times.min() < emitted_up_to:
                    raise OrderError(f"chunk record out of order beyond {reorder_tol} ps")
                newest = int(running[-1])
            channels = np.concatenate([carry_ch, channels])
            times = np.concatenate([carry_t, times])
            release = times < newest - reorder_tol
            if np.any(release):
                emitted_up_to = newest - reorder_tol
                order = np.lexsort((channels[release], times[release]))
                logger.debug(f"Releasing {int(release.sum())} clicks below {emitted_up_to} ps")
                yield ClickStream(channels[release][order], times[release][order], n_channels)
            carry_ch, carry_t = channels[~release], times[~release]
        if carry_t.size:
            order = np.lexsort((carry_ch, carry_t))
            yield ClickStream(carry_ch[order], carry_t[order], n_channels)
    finally:
        if handle is not source:
            handle.close()


def gqtt_bytes(stream: ClickStream) -> bytes:
    rec = np.empty(len(stream), dtype=RECORD_DTYPE)
    rec["channel"] = stream.channels
    rec["t_ps"] = stream.times.astype(np.uint64)
    return GQTT_MAGIC + bytes([stream.n_channels]) + rec.tobytes()


def write_gqtt(stream: ClickStream, target: Union[str, os.PathLike, BinaryIO]):
    """Write the GQTT binary form of a stream."""
    data = gqtt_bytes(stream)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "wb") as handle:
            handle.write(data)
    else:
        target.write(data)
    logger.info(f"Wrote {len(stream)} clicks as GQTT")


def write_csv(stream: ClickStream, target: Union[str, os.PathLike, BinaryIO]):
    """Write the 'channel,t_ps' CSV form of a stream."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    if len(stream):
        np.savetxt(buf, np.column_stack([stream.channels.astype(np.int64), stream.times]),
                   fmt="%d", delimiter=",")
    data = buf.getvalue().encode("utf-8")
    if isinstance(target, (str, os.PathLike)):
        with open(target, "wb") as handle:
            handle.write(data)
    else:
        target.write(data)


# Jacobi coordinates

def jacobi(t1_ns: float, t2_ns: float, t3_ns: float) -> JacobiPoint:
    """j₁ = (2t₁ - t₂ - t₃)/√6, j₂ = (t₂ - t₃)/√2."""
    j1, j2 = jacobi_coordinates(t1_ns, t2_ns, t3_ns)
    return JacobiPoint(j1=float(j1), j2=float(j2))


def jacobi_coordinates(t1, t2, t3):
    t1, t2, t3 = (np.asarray(t, dtype=float) for t in (t1, t2, t3))
    return (2.0 * t1 - t2 - t3) / math.sqrt(6.0), (t2 - t3) / math.sqrt(2.0)


# Pulse assignment

def assign_pulses(s: ClickStream, cfg: AnalysisConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Channels, pulse indices and intra-pulse offsets (ps) of the clicks inside the window.

    Each click goes to the nearest pulse center; the window is applied to the offset.
    """
    rel = s.times - cfg.window_center_ps
    pulses = np.floor_divide(rel + cfg.period_ps // 2, cfg.period_ps)
    offsets = rel - pulses * cfg.period_ps
    half = cfg.window_ps / 2.0
    keep = (offsets >= -half) & (offsets < half)
    return s.channels[keep].astype(np.int64), pulses[keep], offsets[keep]


def _channel_tables(channels: np.ndarray, pulses: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Per channel: distinct pulse indices and their click multiplicities."""
    tables = []
    for c in range(N_CHANNELS):
        unique, counts = np.unique(pulses[channels == c], return_counts=True)
        tables.append((unique, counts.astype(np.int64)))
    return tables


def _lookup(table: Tuple[np.ndarray, np.ndarray], targets: np.ndarray) -> np.ndarray:
    pulses, counts = table
    if pulses.size == 0:
        return np.zeros(targets.shape, dtype=np.int64)
    idx = np.searchsorted(pulses, targets)
    idx_c = np.minimum(idx, pulses.size - 1)
    found = (idx < pulses.size) & (pulses[idx_c] == targets)
    return np.where(found, counts[idx_c], 0)


def _triple_sum(tables, shifts: Tuple[int, int, int], lo: int, hi: int) -> int:
    """Σ_p Π_c m_c(p + shifts[c]) over anchors p + min(shifts) in [lo, hi)."""
    k0 = int(np.argmin(shifts))
    pulses, counts = tables[k0]
    sel = (pulses >= lo) & (pulses < hi)
    base = pulses[sel] - shifts[k0]
    product = counts[sel]
    for c in range(N_CHANNELS):
        if c != k0:
            product = product * _lookup(tables[c], base + shifts[c])
    return int(product.sum())


def _pairlag_patterns():
    """(key, shifts): one channel alone in the previous or next pulse."""
    for alone in range(N_CHANNELS):
        for sign in (-1, 1):
            shifts = [0, 0, 0]
            shifts[alone] = sign
            yield f"{alone}{sign:+d}", tuple(shifts)


def _separate_patterns(delay: int):
    """Six detector-to-pulse orderings over pulses (p, p+D, p+2D)."""
    for order in permutations(range(N_CHANNELS)):
        shifts = [0, 0, 0]
        for position, channel in enumerate(order):
            shifts[channel] = position * delay
        yield tuple(shifts)


def _count_block(tables, cfg: AnalysisConfig, lo: int, hi: int) -> Counter:
    """
    Raw counts of every term whose anchor (earliest pulse) lies in [lo, hi).

    Needs complete data for pulses [lo, hi + reach_pulses].
    """
    raw = Counter()
    delay = cfg.norm_delay_pulses
    lags = list(range(-cfg.max_pulse_lag, cfg.max_pulse_lag + 1)) + [-delay, delay]
    for lag in lags:
        total = 0
        for i, j in CHANNEL_PAIRS:
            pulses, counts = tables[i]
            anchor = pulses if lag >= 0 else pulses + lag
            sel = (anchor >= lo) & (anchor < hi)
            total += int(np.dot(counts[sel], _lookup(tables[j], pulses[sel] + lag)))
        raw[("pair", lag)] += total
    raw[("same",)] += _triple_sum(tables, (0, 0, 0), lo, hi)
    for key, shifts in _pairlag_patterns():
        raw[("pairlag", key)] += _triple_sum(tables, shifts, lo, hi)
    for shifts in _separate_patterns(delay):
        raw[("separate",)] += _triple_sum(tables, shifts, lo, hi)
    for c in range(N_CHANNELS):
        pulses, counts = tables[c]
        raw[("single", c)] += int(counts[(pulses >= lo) & (pulses < hi)].sum())
    return raw


def _to_set(raw: Counter, cfg: AnalysisConfig, n_shots: int) -> CoincidenceSet:
    delay = cfg.norm_delay_pulses
    lags = list(range(-cfg.max_pulse_lag, cfg.max_pulse_lag + 1)) + [-delay, delay]
    pooled = int(raw[("separate",)])
    return CoincidenceSet(
        pair_hist={lag: int(raw[("pair", lag)]) for lag in sorted(set(lags))},
        triple_same=int(raw[("same",)]),
        triple_pairlag={key: int(raw[("pairlag", key)]) for key, _ in _pairlag_patterns()},
        triple_separate=pooled / 6.0,
        triple_separate_pooled=pooled,
        singles=[int(raw[("single", c)]) for c in range(N_CHANNELS)],
        n_shots=n_shots,
    )


def _shots(cfg: AnalysisConfig, pmin: Optional[int], pmax: Optional[int]) -> int:
    if cfg.n_shots is not None:
        return cfg.n_shots
    if pmin is None:
        return 0
    return int(pmax - pmin + 1)


def count_coincidences(s: ClickStream, cfg: AnalysisConfig) -> CoincidenceSet:
    """
    Pulse-resolved two- and three-fold coincidence counts of a sorted stream.

    Pairs are pooled over the three channel pairs (i < j, lag = p_j - p_i) for
    lags within ±max_pulse_lag and ±norm_delay_pulses. Triples are counted in one
    pulse, in the six two-plus-neighbour patterns, and at (p, p+D, p+2D) for all
    six detector orderings.
    """
    channels, pulses, _ = assign_pulses(s, cfg)
    raw = _count_block(_channel_tables(channels, pulses), cfg, _PULSE_MIN, _PULSE_MAX)
    pmin, pmax = (int(pulses.min()), int(pulses.max())) if pulses.size else (None, None)
    result = _to_set(raw, cfg, _shots(cfg, pmin, pmax))
    logger.info(f"Counted {pulses.size} in-window clicks of {len(s)}: "
                f"pairs(0)={result.pair_hist.get(0, 0)}, triples(same)={result.triple_same}")
    return result


class CoincidenceCounter:
    """
    Streaming coincidence counter fed with consecutive, time-ordered chunks.

    Only the last reach_pulses pulses of clicks are buffered; finalize() returns
    the same CoincidenceSet that count_coincidences gives for the whole stream.
    """

    def __init__(self, cfg: AnalysisConfig):
        self.cfg = cfg
        self._channels = np.zeros(0, dtype=np.int64)
        self._pulses = np.zeros(0, dtype=np.int64)
        self._counted_below = _PULSE_MIN
        self._raw = Counter()
        self._pmin: Optional[int] = None
        self._pmax: Optional[int] = None
        self.n_clicks = 0

    def feed(self, chunk: ClickStream):
        channels, pulses, _ = assign_pulses(chunk, self.cfg)
        self.n_clicks += len(chunk)
        if pulses.size == 0:
            return
        if self._pmax is not None and int(pulses[0]) < self._pmax:
            raise OrderError("chunks must be fed in time order")
        self._pmin = int(pulses[0]) if self._pmin is None else self._pmin
        self._pmax = int(pulses[-1])
        self._channels = np.concatenate([self._channels, channels])
        self._pulses = np.concatenate([self._pulses, pulses])

        safe_hi = self._pmax - self.cfg.reach_pulses
        if safe_hi > self._counted_below:
            tables = _channel_tables(self._channels, self._pulses)
            self._raw.update(_count_block(tables, self.cfg, self._counted_below, safe_hi))
            self._counted_below = safe_hi
            keep = self._pulses >= safe_hi
            self._channels, self._pulses = self._channels[keep], self._pulses[keep]
            logger.debug(f"Counted anchors below pulse {safe_hi}, {int(keep.sum())} clicks buffered")

    def finalize(self) -> CoincidenceSet:
        tables = _channel_tables(self._channels, self._pulses)
        raw = Counter(self._raw)
        raw.update(_count_block(tables, self.cfg, self._counted_below, _PULSE_MAX))
        return _to_set(raw, self.cfg, _shots(self.cfg, self._pmin, self._pmax))


def _count_range(channels: np.ndarray, pulses: np.ndarray, cfg: AnalysisConfig, lo: int, hi: int) -> Counter:
    upper = min(hi + cfg.reach_pulses + 1, int(_PULSE_MAX))
    sel = (pulses >= lo) & (pulses < upper)
    return _count_block(_channel_tables(channels[sel], pulses[sel]), cfg, lo, hi)


def count_coincidences_parallel(s: ClickStream, cfg: AnalysisConfig, n_jobs: int = 1,
                                n_chunks: Optional[int] = None) -> CoincidenceSet:
    """count_coincidences over pulse blocks processed by joblib workers and merged in block order."""
    channels, pulses, _ = assign_pulses(s, cfg)
    if pulses.size == 0:
        return _to_set(Counter(), cfg, _shots(cfg, None, None))
    n_chunks = n_chunks or max(1, n_jobs if n_jobs > 0 else os.cpu_count() or 1)
    pmin, pmax = int(pulses.min()), int(pulses.max())
    edges = np.linspace(pmin, pmax + 1, n_chunks + 1).astype(np.int64)
    edges[0], edges[-1] = _PULSE_MIN, _PULSE_MAX
    blocks = [(int(edges[k]), int(edges[k + 1])) for k in range(n_chunks) if edges[k + 1] > edges[k]]
    parts = Parallel(n_jobs=n_jobs)(delayed(_count_range)(channels, pulses, cfg, lo, hi) for lo, hi in blocks)
    raw = Counter()
    for part in parts:
        raw.update(part)
    logger.info(f"Merged coincidence counts from {len(blocks)} blocks")
    return _to_set(raw, cfg, _shots(cfg, pmin, pmax))


def merge_coincidences(a: CoincidenceSet, b: CoincidenceSet) -> CoincidenceSet:
    """Sum of two disjoint counting results (shots add)."""
    pooled = a.triple_separate_pooled + b.triple_separate_pooled
    return CoincidenceSet(
        pair_hist={lag: a.pair_hist.get(lag, 0) + b.pair_hist.get(lag, 0)
                   for lag in sorted(set(a.pair_hist) | set(b.pair_hist))},
        triple_same=a.triple_same + b.triple_same,
        triple_pairlag={key: a.triple_pairlag.get(key, 0) + b.triple_pairlag.get(key, 0)
                        for key in sorted(set(a.triple_pairlag) | set(b.triple_pairlag))},
        triple_separate=pooled / 6.0,
        triple_separate_pooled=pooled,
        singles=[x + y for x, y in zip(a.singles, b.singles)],
        n_shots=a.n_shots + b.n_shots,
    )


# Estimates

def estimate_g2(c: CoincidenceSet, cfg: AnalysisConfig) -> Tuple[float, float]:
    """g² = pair_hist[0]/pair_hist[D] with independent Poisson errors."""
    den = c.pair_hist.get(cfg.norm_delay_pulses, 0)
    if den <= 0:
        raise NoNormalization(f"no pair coincidences at the normalization lag {cfg.norm_delay_pulses}")
    num = c.pair_hist.get(0, 0)
    if num == 0:
        return 0.0, zero_count_upper_limit() / den
    g2 = num / den
    return g2, g2 * math.sqrt(1.0 / num + 1.0 / den)


def estimate_g3(c: CoincidenceSet, cfg: AnalysisConfig) -> Tuple[float, float, bool]:
    """
    g³ = triple_same/triple_separate.

    With no same-pulse triples the one-sided Poisson upper limit is returned in
    place of σ and flagged.
    """
    den = c.triple_separate
    if den <= 0:
        raise NoNormalization("no three-separate-pulse triples for the g3 normalization")
    if c.triple_same == 0:
        return 0.0, zero_count_upper_limit() / den, True
    g3 = c.triple_same / den
    return g3, g3 * math.sqrt(1.0 / c.triple_same + 1.0 / den), False


def pair_lag_g3(c: CoincidenceSet) -> Tuple[float, float]:
    """Two-in-one-pulse, one-in-neighbour triples per pattern, normalized like g³."""
    den = c.triple_separate
    if den <= 0:
        raise NoNormalization("no three-separate-pulse triples for the g3 normalization")
    per_pattern = sum(c.triple_pairlag.values()) / max(len(c.triple_pairlag), 1)
    if per_pattern == 0:
        return 0.0, zero_count_upper_limit() / den
    value = per_pattern / den
    return value, value * math.sqrt(1.0 / sum(c.triple_pairlag.values()) + 1.0 / den)


# Jacobi histograms

def _expand(rows: List[np.ndarray], anchor_pulses: np.ndarray, target_pulses: np.ndarray,
            channel_pulses: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
    """Pair every row with every click of a channel at its target pulse."""
    start = np.searchsorted(channel_pulses, target_pulses, side="left")
    stop = np.searchsorted(channel_pulses, target_pulses, side="right")
    n = stop - start
    total = int(n.sum())
    group_start = np.repeat(np.cumsum(n) - n, n)
    matched = np.repeat(start, n) + (np.arange(total) - group_start)
    return [np.repeat(r, n) for r in rows] + [matched], np.repeat(anchor_pulses, n)


def _triple_offsets(per_channel, shifts: Tuple[int, int, int]) -> Tuple[np.ndarray, ...]:
    """Intra-pulse offsets (ns) of channels 0, 1, 2 for all triples matching the shifts."""
    k0 = int(np.argmin(shifts))
    others = [c for c in range(N_CHANNELS) if c != k0]
    pulses0 = per_channel[k0][0]
    rows = [np.arange(pulses0.size)]
    base = pulses0 - shifts[k0]
    for c in others:
        rows, base = _expand(rows, base, base + shifts[c], per_channel[c][0])
    index = dict(zip([k0] + others, rows))
    return tuple(per_channel[c][1][index[c]] / 1000.0 for c in range(N_CHANNELS))


def _selection_patterns(selection: Selection, cfg: AnalysisConfig):
    selection = Selection(selection)
    if selection == Selection.SAME_PULSE:
        return [(0, 0, 0)]
    if selection == Selection.PAIR_LAG:
        return [shifts for _, shifts in _pairlag_patterns()]
    return list(_separate_patterns(cfg.norm_delay_pulses))


def jacobi_points(s: ClickStream, cfg: AnalysisConfig, selection: Selection) -> Tuple[np.ndarray, np.ndarray]:
    """Jacobi coordinates (ns) of the intra-pulse offsets of every qualifying triple."""
    channels, pulses, offsets = assign_pulses(s, cfg)
    per_channel = []
    for c in range(N_CHANNELS):
        sel = channels == c
        order = np.argsort(pulses[sel], kind="stable")
        per_channel.append((pulses[sel][order], offsets[sel][order]))
    j1_parts, j2_parts = [], []
    for shifts in _selection_patterns(selection, cfg):
        t1, t2, t3 = _triple_offsets(per_channel, shifts)
        j1, j2 = jacobi_coordinates(t1, t2, t3)
        j1_parts.append(j1)
        j2_parts.append(j2)
    return np.concatenate(j1_parts), np.concatenate(j2_parts)


def jacobi_edges(cfg: AnalysisConfig, bin_ns: Optional[float] = None) -> np.ndarray:
    """Bin edges with one bin centred on the origin."""
    width = bin_ns or cfg.jacobi_bin_ns
    if width <= 0:
        raise DomainError("Jacobi bin width must be positive")
    n = int(math.ceil(cfg.jacobi_extent_ns / width))
    return (np.arange(-n, n + 2) - 0.5) * width


def jacobi_histogram(s: ClickStream, cfg: AnalysisConfig, selection: Selection,
                     bin_ns: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """2D histogram over (j1, j2) of the selected triples; returns (counts, j1_edges, j2_edges)."""
    j1, j2 = jacobi_points(s, cfg, selection)
    edges = jacobi_edges(cfg, bin_ns)
    counts, e1, e2 = np.histogram2d(j1, j2, bins=(edges, edges))
    logger.info(f"Jacobi histogram ({Selection(selection).value}): {j1.size} triples, "
                f"{int(counts.sum())} inside the plotted range")
    return counts.astype(np.int64), e1, e2


def rotational_triplets(j1: np.ndarray, j2: np.ndarray, n_radial: int, n_sectors: int,
                        r_max: float) -> np.ndarray:
    """
    Polar-sector counts grouped as [radial, sector, k] with the three members k
    of each group related by 120° rotations.
    """
    if n_sectors % 3:
        raise DomainError("n_sectors must be a multiple of 3")
    radius = np.hypot(j1, j2)
    angle = np.mod(np.arctan2(j2, j1), 2.0 * math.pi)
    keep = radius < r_max
    r_bin = (radius[keep] / r_max * n_radial).astype(np.int64)
    s_bin = np.minimum((angle[keep] / (2.0 * math.pi) * n_sectors).astype(np.int64), n_sectors - 1)
    counts = np.zeros((n_radial, n_sectors), dtype=np.int64)
    np.add.at(counts, (r_bin, s_bin), 1)
    return counts.reshape(n_radial, 3, n_sectors // 3).transpose(0, 2, 1)
