"""Round-synchronous simulator of the low-memory MPC model.

Data lives in :class:`DistributedStream` objects: columnar tables of integer
words spread over a fleet of machines. Local work on a stream (adding,
dropping or filtering columns) is free; every primitive that moves records
between machines charges rounds. Resident memory is re-checked whenever a
stream changes, and a breach of either cap raises :class:`AccountingFault`.
"""
from __future__ import annotations

import json
import math
import weakref
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

NEG_INF = -(1 << 62)
POS_INF = 1 << 62
MAX_ARITY = 8
MAX_RECORD_WIDTH = 2 * MAX_ARITY

# sort + prefix broadcast + sort back to the query order
JOIN_SORTS = 3


class AccountingFault(RuntimeError):
    """A machine or the whole fleet exceeded its word budget."""

    def __init__(self, kind, words, cap, round_index, phase, machine=None):
        self.kind = kind
        self.words = int(words)
        self.cap = int(cap)
        self.round = round_index
        self.phase = phase
        self.machine = machine
        where = f" on machine {machine}" if machine is not None else ""
        super().__init__(
            f"{kind}: {self.words} words > cap {self.cap}{where} "
            f"(round {round_index}, phase {phase!r})"
        )


class WordRecord(NamedTuple):
    key: tuple
    payload: tuple = ()


@dataclass(frozen=True)
class MpcConfig:
    """Machine sizing for one run.

    ``local_cap`` defaults to ``ceil(kappa * n**delta)`` words, floored at the
    widest record so that a single record always fits on a machine; the
    global budget is ``c_g * (m + n)``.
    Explicit ``local_cap``/``global_budget``/``machine_count`` override the
    derived values (used to replay a run under tightened caps).
    """

    n: int
    m: int = 0
    delta: float = 0.5
    kappa: float = 4.0
    c_g: float = 8.0
    sort_round_cost: int = 1
    rng_seed: int = 0
    local_cap: int | None = None
    global_budget: int | None = None
    machine_count: int | None = None

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("empty instance: n must be positive")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if self.sort_round_cost < 0:
            raise ValueError("sort_round_cost must be nonnegative")
        if self.local_cap is None:
            raw = math.ceil(self.kappa * self.n ** self.delta - 1e-9)
            object.__setattr__(self, "local_cap", max(raw, MAX_RECORD_WIDTH))
        if self.local_cap < 2:
            raise ValueError(f"local_cap must be >= 2, got {self.local_cap}")
        if self.global_budget is None:
            object.__setattr__(self, "global_budget", math.ceil(self.c_g * (self.m + self.n) - 1e-9))
        if self.machine_count is None:
            count = max(1, math.ceil(self.global_budget / self.local_cap))
            object.__setattr__(self, "machine_count", count)
        if self.machine_count * self.local_cap < self.global_budget:
            raise ValueError("machine_count * local_cap must cover global_budget")

    def derived_local_cap(self):
        return math.ceil(self.kappa * self.n ** self.delta - 1e-9)


@dataclass
class RoundStats:
    rounds_total: int = 0
    rounds_by_phase: dict = field(default_factory=lambda: defaultdict(int))
    peak_local_words: int = 0
    total_global_words: int = 0
    messages_sent: int = 0
    peak_global_by_phase: dict = field(default_factory=lambda: defaultdict(int))

    def as_dict(self, config: MpcConfig | None = None) -> dict:
        out = {
            "rounds_total": self.rounds_total,
            "rounds_by_phase": dict(sorted(self.rounds_by_phase.items())),
            "peak_local_words": self.peak_local_words,
            "total_global_words": self.total_global_words,
            "messages_sent": self.messages_sent,
            "peak_global_by_phase": dict(sorted(self.peak_global_by_phase.items())),
        }
        if config is not None:
            out["config"] = {
                "n": config.n,
                "m": config.m,
                "delta": config.delta,
                "local_cap": config.local_cap,
                "global_budget": config.global_budget,
                "machine_count": config.machine_count,
            }
        return out

    def to_json(self, config: MpcConfig | None = None) -> str:
        return json.dumps(self.as_dict(config), sort_keys=True)


def _as_column(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.dtype == bool:
        arr = arr.astype(np.int64)
    elif arr.dtype.kind in "iu":
        arr = arr.astype(np.int64, copy=False)
    return arr


class DistributedStream:
    """A columnar multiset of records spread evenly over the fleet.

    Each column holds one word per record. Records keep their relative
    order unless a primitive moves them. Mutating methods work in place and
    return ``self`` so calls can be chained.
    """

    def __init__(self, sim: "Simulator", columns: Mapping[str, Iterable] | None = None,
                 placement: np.ndarray | None = None):
        self.sim = sim
        self._cols: dict[str, np.ndarray] = {}
        self._len = 0
        self.placement = placement
        sim._register(self)
        if columns:
            self._set_columns(dict(columns))

    def _set_columns(self, cols):
        lengths = set()
        clean = {}
        for name, values in cols.items():
            arr = _as_column(values)
            lengths.add(len(arr))
            clean[name] = arr
        if len(lengths) > 1:
            raise ValueError(f"ragged columns: {sorted(lengths)}")
        if self._cols and clean and lengths and lengths != {self._len}:
            raise ValueError("new column length does not match stream")
        if not self._cols and lengths:
            self._len = lengths.pop()
        self._cols.update(clean)
        self.sim._account()

    # -- shape ------------------------------------------------------------
    def __len__(self):
        return self._len

    @property
    def width(self) -> int:
        return len(self._cols)

    @property
    def words(self) -> int:
        return self._len * len(self._cols)

    @property
    def columns(self) -> list[str]:
        return list(self._cols)

    def __contains__(self, name):
        return name in self._cols

    def __getitem__(self, name) -> np.ndarray:
        arr = self._cols[name]
        view = arr.view()
        view.flags.writeable = False
        return view

    # -- local work (no rounds) ----------------------------------------------
    def assign(self, **cols) -> "DistributedStream":
        if not self._cols:
            self._set_columns(cols)
            return self
        for name, values in cols.items():
            arr = _as_column(values)
            if arr.shape == () or len(arr) != self._len:
                arr = np.broadcast_to(arr, (self._len,)).copy()
            self._cols[name] = arr
        self.sim._account()
        return self

    def drop(self, *names) -> "DistributedStream":
        for name in names:
            self._cols.pop(name, None)
        self.sim._account()
        return self

    def keep(self, *names) -> "DistributedStream":
        self._cols = {k: self._cols[k] for k in names}
        self.sim._account()
        return self

    def rename(self, **mapping) -> "DistributedStream":
        self._cols = {mapping.get(k, k): v for k, v in self._cols.items()}
        return self

    def filter(self, mask) -> "DistributedStream":
        mask = np.asarray(mask, dtype=bool)
        self._cols = {k: v[mask] for k, v in self._cols.items()}
        self._len = int(mask.sum())
        if self.placement is not None:
            self.placement = self.placement[mask]
        self.sim._account()
        return self

    def take(self, mask=None, columns: Sequence[str] | None = None,
             rename: Mapping[str, str] | None = None) -> "DistributedStream":
        """Copy some records/columns into a new stream on the same machines."""
        names = list(columns) if columns is not None else self.columns
        rename = rename or {}
        if mask is None:
            data = {rename.get(k, k): self._cols[k].copy() for k in names}
        else:
            data = {rename.get(k, k): self._cols[k][mask] for k in names}
        out = DistributedStream(self.sim)
        if not data:
            return out
        out._set_columns(data)
        return out

    def release(self):
        self._cols = {}
        self._len = 0
        self.sim._account()

    def to_records(self, columns: Sequence[str] | None = None) -> list[tuple]:
        names = list(columns) if columns is not None else self.columns
        if not names:
            return [() for _ in range(self._len)]
        return list(zip(*(self._cols[k].tolist() for k in names)))

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: self[k] for k in self._cols}

    def __repr__(self):
        return f"DistributedStream(len={self._len}, columns={self.columns})"


def _stable_order(stream: DistributedStream, key) -> np.ndarray:
    if callable(key):
        key = key(stream)
    if isinstance(key, str):
        return np.argsort(stream._cols[key], kind="stable")
    if isinstance(key, np.ndarray):
        return np.argsort(key, kind="stable")
    arrays = [stream._cols[k] if isinstance(k, str) else np.asarray(k) for k in key]
    if not arrays:
        return np.arange(len(stream))
    # lexsort treats the last key as primary
    return np.lexsort(arrays[::-1])


def _joint_codes(left: list[np.ndarray], right: list[np.ndarray]):
    """Map multi-column keys of two tables onto shared integer codes."""
    if len(left) == 1:
        return left[0], right[0]
    stacked = np.stack([np.concatenate([a, b]) for a, b in zip(left, right)], axis=1)
    if len(stacked) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    _, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    return inverse[: len(left[0])], inverse[len(left[0]):]


def _ufunc_for(op):
    if isinstance(op, np.ufunc):
        return op
    names = {"+": np.add, "add": np.add, "sum": np.add, "max": np.maximum,
             "min": np.minimum}
    if isinstance(op, str) and op in names:
        return names[op]
    return None


class Simulator:
    """A fleet of ``machine_count`` machines with ``local_cap`` words each."""

    def __init__(self, config: MpcConfig):
        self.config = config
        self.stats = RoundStats()
        self._live: "weakref.WeakSet[DistributedStream]" = weakref.WeakSet()
        self._phase = ["setup"]
        self._extra_words = 0

    # -- bookkeeping ----------------------------------------------------------
    @property
    def phase_name(self) -> str:
        return self._phase[-1]

    @contextmanager
    def phase(self, name: str):
        self._phase.append(name)
        try:
            yield self
        finally:
            self._phase.pop()

    def _register(self, stream):
        self._live.add(stream)

    def _charge(self, rounds: int, messages: int = 0):
        self.stats.rounds_total += rounds
        self.stats.rounds_by_phase[self.phase_name] += rounds
        self.stats.messages_sent += int(messages)

    def resident_words(self) -> int:
        return sum(s.words for s in list(self._live)) + self._extra_words

    def _account(self):
        cfg = self.config
        balanced = self._extra_words
        explicit = None
        # hot path: read the weakref set directly instead of through its iterator guard
        for ref in list(self._live.data):
            s = ref()
            if s is None or not s._len:
                continue
            width = len(s._cols)
            if not width:
                continue
            if width > MAX_RECORD_WIDTH or width > cfg.local_cap:
                raise AccountingFault("record too wide", width, min(cfg.local_cap, MAX_RECORD_WIDTH),
                                      self.stats.rounds_total, self.phase_name)
            if s.placement is None:
                balanced += s._len * width
            else:
                load = np.bincount(s.placement, minlength=cfg.machine_count) * width
                explicit = load if explicit is None else explicit + load
        total = balanced + (int(explicit.sum()) if explicit is not None else 0)
        per_machine = -(-balanced // cfg.machine_count)
        worst_machine = None
        if explicit is not None:
            worst_machine = int(np.argmax(explicit))
            per_machine += int(explicit[worst_machine])
        st = self.stats
        st.total_global_words = max(st.total_global_words, total)
        st.peak_local_words = max(st.peak_local_words, per_machine)
        ph = self.phase_name
        st.peak_global_by_phase[ph] = max(st.peak_global_by_phase[ph], total)
        if total > cfg.global_budget:
            raise AccountingFault("global budget exceeded", total, cfg.global_budget,
                                  st.rounds_total, ph)
        if per_machine > cfg.local_cap:
            raise AccountingFault("local memory exceeded", per_machine, cfg.local_cap,
                                  st.rounds_total, ph, machine=worst_machine)

    @contextmanager
    def reserve(self, words: int):
        """Hold ``words`` of scratch space for the duration of the block."""
        self._extra_words += words
        try:
            self._account()
            yield
        finally:
            self._extra_words -= words

    # -- input placement -------------------------------------------------------
    def scatter(self, records) -> DistributedStream:
        """Place input records round-robin on the fleet (0 rounds)."""
        if isinstance(records, Mapping):
            return DistributedStream(self, records)
        records = list(records)
        if not records:
            return DistributedStream(self)
        first = records[0]
        if isinstance(first, WordRecord):
            ka = max(len(r.key) for r in records)
            pa = max(len(r.payload) for r in records)
            if ka > MAX_ARITY or pa > MAX_ARITY:
                raise ValueError("WordRecord arity exceeds 8")
            cols = {}
            for j in range(ka):
                cols[f"k{j}"] = [r.key[j] if j < len(r.key) else 0 for r in records]
            for j in range(pa):
                cols[f"p{j}"] = [r.payload[j] if j < len(r.payload) else 0 for r in records]
            return DistributedStream(self, cols)
        arr = np.asarray(records)
        if arr.ndim == 1:
            return DistributedStream(self, {"k0": arr})
        return DistributedStream(self, {f"k{j}": arr[:, j] for j in range(arr.shape[1])})

    # -- primitives ----------------------------------------------------------
    def distributed_sort(self, stream: DistributedStream, key) -> DistributedStream:
        """Stable global sort by ``key``; records are moved, not copied."""
        self._charge(self.config.sort_round_cost, len(stream))
        if len(stream):
            order = _stable_order(stream, key)
            stream._cols = {k: v[order] for k, v in stream._cols.items()}
        stream.placement = None
        self._account()
        return stream

    sort = distributed_sort

    def prefix_aggregate(self, stream: DistributedStream, op, identity, column: str,
                         out: str | None = None, segment: str | None = None,
                         inclusive: bool = False) -> DistributedStream:
        """Exclusive (or inclusive) scan of ``column`` under an associative op.

        With ``segment`` the scan restarts wherever the segment column
        changes value. The result is written to column ``out``.
        """
        self._charge(self.config.sort_round_cost, 0)
        out = out or f"{column}_prefix"
        vals = stream._cols[column] if len(stream) else np.zeros(0, dtype=np.int64)
        n = len(vals)
        uf = _ufunc_for(op)
        if n == 0:
            stream.assign(**{out: np.zeros(0, dtype=np.int64)})
            return stream
        if uf is not None and segment is None:
            inc = uf.accumulate(vals)
        elif uf is not None:
            seg = stream._cols[segment]
            starts = np.flatnonzero(np.r_[True, seg[1:] != seg[:-1]])
            if uf is np.maximum or uf is np.minimum:
                inc = _segmented_extremum(vals, starts, uf)
            elif uf is np.add:
                total = np.add.accumulate(vals)
                base = np.repeat(np.r_[0, total[starts[1:] - 1]], np.diff(np.r_[starts, n]))
                inc = total - base
            else:
                inc = np.concatenate([uf.accumulate(part) for part in np.split(vals, starts[1:])])
        else:
            inc = np.empty(n, dtype=object)
            seg = stream._cols[segment] if segment is not None else None
            acc = identity
            for i in range(n):
                if seg is not None and i and seg[i] != seg[i - 1]:
                    acc = identity
                acc = op(acc, vals[i])
                inc[i] = acc
        if inclusive:
            result = inc
        else:
            dtype = np.result_type(np.asarray(inc).dtype, np.asarray(identity).dtype) \
                if np.asarray(inc).dtype != object else object
            result = np.empty(n, dtype=dtype)
            result[1:] = inc[:-1]
            result[0] = identity
            if segment is not None:
                seg = stream._cols[segment]
                result[np.r_[True, seg[1:] != seg[:-1]]] = identity
        stream.assign(**{out: result})
        return stream

    def exchange(self, stream: DistributedStream, destination) -> DistributedStream:
        """Deliver every record to a chosen machine in one round.

        ``destination`` is an array (or callable on the stream) of machine
        indices. Senders are taken from the current placement; the fault
        names the first machine that sends or receives more than
        ``local_cap`` words.
        """
        cfg = self.config
        dest = destination(stream) if callable(destination) else destination
        dest = np.asarray(dest, dtype=np.int64)
        if len(dest) != len(stream):
            raise ValueError("one destination per record is required")
        if len(dest) and (dest.min() < 0 or dest.max() >= cfg.machine_count):
            raise ValueError("destination machine out of range")
        self._charge(1, len(stream))
        src = stream.placement if stream.placement is not None else self._balanced_placement(len(stream))
        moving = src != dest
        w = stream.width
        sent = np.bincount(src[moving], minlength=cfg.machine_count) * w
        recv = np.bincount(dest[moving], minlength=cfg.machine_count) * w
        for kind, load in (("send overflow", sent), ("receive overflow", recv)):
            if len(load) and load.max() > cfg.local_cap:
                mach = int(np.argmax(load))
                raise AccountingFault(kind, load[mach], cfg.local_cap,
                                      self.stats.rounds_total, self.phase_name, machine=mach)
        order = np.argsort(dest, kind="stable")
        stream._cols = {k: v[order] for k, v in stream._cols.items()}
        stream.placement = dest[order]
        self._account()
        return stream

    def _balanced_placement(self, count: int) -> np.ndarray:
        m = self.config.machine_count
        return (np.arange(count, dtype=np.int64) * m) // max(count, 1)

    # -- composite primitives (constant numbers of sorts / scans) --------------
    def lookup(self, stream: DistributedStream, on, table: DistributedStream, key,
               fields: Mapping[str, str], default=None) -> DistributedStream:
        """Attach ``table`` columns to ``stream`` records with a matching key.

        Implemented as a co-sort of both streams, a prefix broadcast of the
        table record inside each key run, and a sort back. ``table`` keys
        must be unique. Unmatched records get ``default`` (a scalar or a
        mapping per output column) or raise ``KeyError`` when it is None.
        """
        self._charge(JOIN_SORTS * self.config.sort_round_cost, len(stream) + len(table))
        on = [on] if isinstance(on, (str, np.ndarray)) else list(on)
        key = [key] if isinstance(key, str) else list(key)
        n = len(stream)
        if n == 0:
            stream.assign(**{o: np.zeros(0, dtype=np.int64) for o in fields})
            return stream
        if len(table) == 0:
            tk = [np.zeros(0, dtype=np.int64) for _ in key]
        else:
            tk = [table._cols[k] for k in key]
        qk = [stream._cols[k] if isinstance(k, str) else np.asarray(k, dtype=np.int64) for k in on]
        qcode, tcode = _joint_codes(qk, tk)
        order = np.argsort(tcode, kind="stable")
        sorted_codes = tcode[order]
        if len(sorted_codes) > 1 and np.any(sorted_codes[1:] == sorted_codes[:-1]):
            raise ValueError("lookup table keys are not unique")
        pos = np.searchsorted(sorted_codes, qcode)
        pos_c = np.minimum(pos, max(len(sorted_codes) - 1, 0))
        hit = (pos < len(sorted_codes)) & (sorted_codes[pos_c] == qcode) if len(sorted_codes) \
            else np.zeros(n, dtype=bool)
        if default is None and not hit.all():
            raise KeyError(f"{int((~hit).sum())} records have no match in lookup table")
        idx = order[pos_c] if len(order) else np.zeros(n, dtype=np.int64)
        new = {}
        for out_name, col in fields.items():
            if len(table):
                vals = table._cols[col][idx]
            else:
                vals = np.zeros(n, dtype=np.int64)
            if not hit.all():
                d = default[out_name] if isinstance(default, Mapping) else default
                vals = np.where(hit, vals, d)
            new[out_name] = vals
        stream.assign(**new)
        return stream

    def group_reduce(self, stream: DistributedStream, by, aggs: Mapping[str, tuple]) -> DistributedStream:
        """One output record per distinct ``by`` value.

        ``aggs`` maps output column -> (input column, op) with op one of
        ``min``/``max``/``sum``/``count``/``first``.
        """
        self._charge(2 * self.config.sort_round_cost, len(stream))
        by = [by] if isinstance(by, str) else list(by)
        out = DistributedStream(self)
        if len(stream) == 0:
            out.assign(**{b: np.zeros(0, dtype=np.int64) for b in by},
                       **{o: np.zeros(0, dtype=np.int64) for o in aggs})
            return out
        order = _stable_order(stream, by)
        keys = [stream._cols[b][order] for b in by]
        change = np.zeros(len(order), dtype=bool)
        change[0] = True
        for k in keys:
            change[1:] |= k[1:] != k[:-1]
        starts = np.flatnonzero(change)
        cols = {b: k[starts] for b, k in zip(by, keys)}
        for name, (col, op) in aggs.items():
            if op == "count":
                cols[name] = np.diff(np.r_[starts, len(order)])
                continue
            vals = stream._cols[col][order]
            if op == "first":
                cols[name] = vals[starts]
            else:
                cols[name] = _ufunc_for(op).reduceat(vals, starts)
        out._set_columns(cols)
        return out

    def interval_lookup(self, stream: DistributedStream, group: str | None, point: str,
                        table: DistributedStream, t_group: str | None, t_low: str, t_high: str,
                        fields: Mapping[str, str], default, found: str | None = None) -> DistributedStream:
        """For each record, find the table interval (same group) holding ``point``.

        Intervals within one group must be pairwise disjoint. Implemented as
        a co-sort by (group, position) and a predecessor prefix scan. Records
        with a negative ``point`` never match. ``found`` names an optional
        0/1 output column.
        """
        self._charge(JOIN_SORTS * self.config.sort_round_cost, len(stream) + len(table))
        n = len(stream)
        if n == 0:
            stream.assign(**{o: np.zeros(0, dtype=np.int64) for o in fields})
            if found:
                stream.assign(**{found: np.zeros(0, dtype=np.int64)})
            return stream
        pts = stream._cols[point]
        if len(table) == 0:
            hit = np.zeros(n, dtype=bool)
            idx = np.zeros(n, dtype=np.int64)
        else:
            lows = table._cols[t_low]
            highs = table._cols[t_high]
            span = int(max(pts.max(), highs.max(), lows.max(), 0)) + 2
            tg = table._cols[t_group] if t_group else np.zeros(len(table), dtype=np.int64)
            qg = stream._cols[group] if group else np.zeros(n, dtype=np.int64)
            tkey = tg.astype(np.int64) * span + lows
            qkey = qg.astype(np.int64) * span + np.maximum(pts, 0)
            order = np.argsort(tkey, kind="stable")
            sk = tkey[order]
            pos = np.searchsorted(sk, qkey, side="right") - 1
            ok = pos >= 0
            idx = order[np.maximum(pos, 0)]
            hit = ok & (pts >= 0) & (tg[idx] == qg) & (lows[idx] <= pts) & (pts <= highs[idx])
        new = {}
        for out_name, col in fields.items():
            vals = table._cols[col][idx] if len(table) else np.zeros(n, dtype=np.int64)
            d = default[out_name] if isinstance(default, Mapping) else default
            new[out_name] = np.where(hit, vals, d)
        if found:
            new[found] = hit
        stream.assign(**new)
        return stream

    def adjacent(self, stream: DistributedStream, column: str, out: str,
                 offset: int = 1, segment: str | None = None, fill=-1) -> DistributedStream:
        """Copy ``column`` from the record ``offset`` positions away (one scan)."""
        self._charge(self.config.sort_round_cost, 0)
        vals = stream._cols[column]
        n = len(vals)
        res = np.full(n, fill, dtype=vals.dtype if n else np.int64)
        if n and abs(offset) < n:
            if offset > 0:
                res[:-offset] = vals[offset:]
            else:
                res[-offset:] = vals[:offset]
            if segment is not None:
                seg = stream._cols[segment]
                nb = np.full(n, -1, dtype=np.int64)
                if offset > 0:
                    nb[:-offset] = np.arange(offset, n)
                else:
                    nb[-offset:] = np.arange(0, n + offset)
                bad = (nb < 0) | (seg[np.maximum(nb, 0)] != seg)
                res[bad] = fill
        stream.assign(**{out: res})
        return stream

    def expand(self, stream: DistributedStream, on: str, table: DistributedStream, key: str,
               fields: Mapping[str, str]) -> DistributedStream:
        """One-to-many join: copy every table record whose ``key`` equals ``on``.

        Returns a new stream with ``stream`` columns repeated once per match
        plus the requested table columns. Co-sort, prefix offsets and a
        redistribution of the copies.
        """
        self._charge(JOIN_SORTS * self.config.sort_round_cost, len(stream) + len(table))
        tk = table._cols[key] if len(table) else np.zeros(0, dtype=np.int64)
        order = np.argsort(tk, kind="stable")
        sk = tk[order]
        q = stream._cols[on] if len(stream) else np.zeros(0, dtype=np.int64)
        lo = np.searchsorted(sk, q, side="left")
        hi = np.searchsorted(sk, q, side="right")
        counts = hi - lo
        rep = np.repeat(np.arange(len(stream)), counts)
        starts = np.repeat(lo - np.r_[0, np.cumsum(counts)[:-1]] if len(counts) else lo, counts)
        tidx = order[np.arange(len(rep)) + starts] if len(rep) else np.zeros(0, dtype=np.int64)
        cols = {k: v[rep] for k, v in stream._cols.items()}
        for out_name, col in fields.items():
            cols[out_name] = table._cols[col][tidx] if len(table) else np.zeros(0, dtype=np.int64)
        out = DistributedStream(self)
        out._set_columns(cols)
        return out


    def gather(self, stream: DistributedStream, index, table: DistributedStream,
               fields: Mapping[str, str], default=-1, where=None) -> DistributedStream:
        """Read columns of a dense table whose record ``i`` holds key ``i``.

        ``index`` is a column name or an array computed locally from the
        stream. Negative indices (and rows outside ``where``) receive
        ``default``; when the output column already exists, rows outside
        ``where`` keep their old value instead. The reply overwrites in place,
        so an existing output column costs no extra words. Charged as a join.
        """
        self._charge(JOIN_SORTS * self.config.sort_round_cost, len(stream))
        idx = stream._cols[index] if isinstance(index, str) else np.asarray(index, dtype=np.int64)
        if len(idx) != len(stream):
            raise ValueError("one index per record is required")
        valid = idx >= 0
        if where is not None:
            valid &= np.asarray(where, dtype=bool)
        safe = np.where(valid, idx, 0)
        new = {}
        for out_name, col in fields.items():
            src = table._cols[col]
            vals = src[safe] if len(src) else np.zeros(len(idx), dtype=np.int64)
            if out_name in stream._cols:
                fallback = stream._cols[out_name]
            else:
                fallback = default[out_name] if isinstance(default, Mapping) else default
            new[out_name] = np.where(valid, vals, fallback)
        stream.assign(**new)
        return stream

    def deliver(self, table: DistributedStream, index, source: DistributedStream,
                fields: Mapping[str, str], combine: str | None = None,
                where=None) -> DistributedStream:
        """Send ``source`` values to records of the dense ``table``.

        ``fields`` maps table column -> source column (or a scalar). Several
        messages to one record are combined with ``combine`` (``min``/``max``);
        without it the targets must be distinct. Charged as a sort plus one
        routing round.
        """
        self._charge(self.config.sort_round_cost + 1, len(source))
        idx = source._cols[index] if isinstance(index, str) else np.asarray(index, dtype=np.int64)
        mask = idx >= 0
        if where is not None:
            mask &= np.asarray(where, dtype=bool)
        idx = idx[mask]
        if combine is None and len(np.unique(idx)) != len(idx):
            raise ValueError("deliver without combine needs distinct targets")
        for tcol, scol in fields.items():
            vals = source._cols[scol][mask] if isinstance(scol, str) else np.full(len(idx), scol)
            col = table._cols[tcol].copy()
            if combine is None:
                col[idx] = vals
            else:
                _ufunc_for(combine).at(col, idx, vals)
            table._cols[tcol] = col
        self._account()
        return table

    def concat(self, first: DistributedStream, second: DistributedStream) -> DistributedStream:
        """Union of two streams with the same columns; both inputs are consumed."""
        if not len(second):
            second.release()
            return first
        if not len(first):
            first.release()
            return second
        cols = {k: np.concatenate([first._cols[k], second._cols[k]]) for k in first.columns}
        first.release()
        second.release()
        out = DistributedStream(self)
        out._set_columns(cols)
        return out

    def count(self, stream: DistributedStream, mask=None) -> int:
        """Global record count (one aggregation round)."""
        self._charge(self.config.sort_round_cost, 0)
        if mask is None:
            return len(stream)
        return int(np.count_nonzero(mask))

    def broadcast_max(self, stream: DistributedStream, column: str, identity=NEG_INF) -> int:
        """Global maximum of a column, known to every machine afterwards."""
        self._charge(self.config.sort_round_cost, 0)
        vals = stream._cols.get(column)
        if vals is None or not len(vals):
            return identity
        return int(vals.max())


def _segmented_extremum(vals, starts, uf):
    """Inclusive min/max scan restarting at each segment start."""
    n = len(vals)
    if n == 0:
        return vals.copy()
    bounds = np.r_[starts, n]
    # work on ranks so the offsets below stay small whatever the values are
    uniq, ranks = np.unique(vals, return_inverse=True)
    ranks = ranks.reshape(-1).astype(np.int64)
    width = len(uniq)
    # lift (max) or sink (min) each segment past all earlier ones so one
    # global scan cannot leak values across segment boundaries
    seg_id = np.repeat(np.arange(len(starts), dtype=np.int64), np.diff(bounds))
    sign = 1 if uf is np.maximum else -1
    acc = uf.accumulate(ranks + sign * seg_id * width)
    return uniq[acc - sign * seg_id * width]


def create_simulator(config: MpcConfig) -> Simulator:
    return Simulator(config)
