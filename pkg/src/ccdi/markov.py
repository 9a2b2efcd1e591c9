"""Finite-alphabet joint Markov models over A x B x C.

Joint symbols are encoded as j = (a * ell + b) * t + c. A context is the
sequence of the k most recent joint symbols, oldest first, encoded in
mixed radix J = m * ell * t; ``transitions[context, j]`` is the probability
that the next joint symbol is j.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .blocks import AlphabetSpec, ccdi_axes
from .info import JointPmf, conditional_mutual_information

ROW_ATOL = 1e-12
BURN_IN = 1000
_TIME_CHUNK = 8192


class ModelError(ValueError):
    """Invalid model definition or unsupported request on a model."""


def seed_for(seed, *keys) -> list[int]:
    """Entropy list for an independent stream keyed by (seed, *keys)."""
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return base + [int(k) for k in keys]


@dataclass(frozen=True, eq=False)
class MarkovModel:
    k: int
    alphabet: AlphabetSpec
    transitions: np.ndarray
    initial: np.ndarray | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ModelError(f"order must be >= 0, got {self.k}")
        J = self.alphabet.joint
        q = np.array(self.transitions, dtype=float)
        if q.shape != (J**self.k, J):
            raise ModelError(f"transition table has shape {q.shape}, expected {(J**self.k, J)}")
        if np.any(q < 0):
            row = int(np.argwhere(q < 0)[0][0])
            raise ModelError(f"negative probability in row {row}")
        sums = q.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_ATOL)
        if bad.size:
            raise ModelError(f"row {int(bad[0])} sums to {sums[bad[0]]!r}, not 1")
        q.setflags(write=False)
        object.__setattr__(self, "transitions", q)
        if self.initial is None:
            init = np.full(J**self.k, 1.0 / J**self.k)
        else:
            init = np.array(self.initial, dtype=float)
            if init.shape != (J**self.k,) or np.any(init < 0) or abs(init.sum() - 1) > ROW_ATOL:
                raise ModelError("initial distribution must be a pmf over the J**k contexts")
        init.setflags(write=False)
        object.__setattr__(self, "initial", init)

    @property
    def joint_size(self) -> int:
        return self.alphabet.joint

    @property
    def positive(self) -> bool:
        """True when every transition probability is strictly positive."""
        return bool(np.all(self.transitions > 0))

    def decode(self, symbols: np.ndarray):
        a = self.alphabet
        symbols = np.asarray(symbols)
        return symbols // (a.ell * a.t), (symbols // a.t) % a.ell, symbols % a.t


def context_symbols(n_contexts_order: int, J: int) -> np.ndarray:
    """(J**k, k) array of joint symbols per context, oldest first."""
    k = n_contexts_order
    idx = np.arange(J**k)
    out = np.empty((J**k, k), dtype=np.int64)
    for pos in range(k - 1, -1, -1):
        out[:, pos] = idx % J
        idx = idx // J
    return out


_TERM = re.compile(r"^\s*([xyz])\s*\[\s*(\d+)\s*\]\s*$")


@dataclass(frozen=True, eq=False)
class StructuralModel:
    """X is an order-``x_order`` chain, Z is iid, and Y is a lagged sum plus noise.

    Y_n = (sum of the listed source[lag] symbols + W_n) mod ell, where W_n is 0
    with probability 1 - noise and otherwise uniform on the nonzero shifts.
    ``x_transitions[context, a]`` uses the last ``x_order`` X symbols, oldest
    first.
    """

    x_transitions: np.ndarray
    z_probs: np.ndarray
    y_terms: tuple[tuple[str, int], ...]
    noise: float
    ell: int = 2
    x_order: int = field(default=-1)

    def __post_init__(self):
        xt = np.array(self.x_transitions, dtype=float)
        if xt.ndim != 2:
            raise ModelError("x transitions must be a 2-d table")
        m = xt.shape[1]
        order = 0
        while m**order < xt.shape[0]:
            order += 1
        if m**order != xt.shape[0]:
            raise ModelError(f"{xt.shape[0]} X rows is not a power of m={m}")
        if self.x_order not in (-1, order):
            raise ModelError(f"x_order={self.x_order} does not match {xt.shape[0]} rows")
        if np.any(xt < 0) or np.any(np.abs(xt.sum(axis=1) - 1) > ROW_ATOL):
            row = int(np.flatnonzero((xt < 0).any(axis=1) | (np.abs(xt.sum(axis=1) - 1) > ROW_ATOL))[0])
            raise ModelError(f"X row {row} is not a probability vector")
        zp = np.array(self.z_probs, dtype=float).ravel()
        if np.any(zp < 0) or abs(zp.sum() - 1) > ROW_ATOL:
            raise ModelError("Z distribution is not a probability vector")
        if not 0.0 <= self.noise <= 1.0:
            raise ModelError(f"noise probability must lie in [0, 1], got {self.noise}")
        terms = []
        for src, lag in self.y_terms:
            if src not in ("x", "y", "z") or lag < 0 or (src == "y" and lag < 1):
                raise ModelError(f"bad Y term {src}[{lag}]")
            terms.append((src, int(lag)))
        object.__setattr__(self, "x_transitions", xt)
        object.__setattr__(self, "z_probs", zp)
        object.__setattr__(self, "y_terms", tuple(terms))
        object.__setattr__(self, "x_order", order)
        AlphabetSpec(m, self.ell, zp.size)

    @property
    def alphabet(self) -> AlphabetSpec:
        return AlphabetSpec(self.x_transitions.shape[1], self.ell, self.z_probs.size)

    @property
    def order(self) -> int:
        lags = [lag for _, lag in self.y_terms]
        return max([self.x_order] + lags)

    def compile(self) -> MarkovModel:
        """Joint order-K transition table, K the largest lag any component uses."""
        alpha = self.alphabet
        m, ell, t = alpha.m, alpha.ell, alpha.t
        J, K = alpha.joint, self.order
        ctx = context_symbols(K, J)
        ca, cb, cc = ctx // (ell * t), (ctx // t) % ell, ctx % t
        x_ctx = np.zeros(J**K, dtype=np.int64)
        for pos in range(K - self.x_order, K):
            x_ctx = x_ctx * m + ca[:, pos]
        q = np.zeros((J**K, J))
        wrong = self.noise / (ell - 1)
        for a in range(m):
            for c in range(t):
                s = np.zeros(J**K, dtype=np.int64)
                for src, lag in self.y_terms:
                    if lag == 0:
                        s += a if src == "x" else c
                    else:
                        s += {"x": ca, "y": cb, "z": cc}[src][:, K - lag]
                s %= ell
                base = self.x_transitions[x_ctx, a] * self.z_probs[c]
                for b in range(ell):
                    py = np.where(s == b, 1.0 - self.noise, wrong)
                    q[:, (a * ell + b) * t + c] = base * py
        return MarkovModel(K, alpha, q)


def benchmark_process(p_noise: float = 0.01) -> StructuralModel:
    """Binary benchmark: order-2 X chain, iid fair Z, Y_n = X_n + Z_{n-3} + W_n mod 2.

    P(X_n = 0 | X_{n-2}, X_{n-1}) is 0.3, 0.8, 0.6, 0.1 for contexts
    (0,0), (0,1), (1,0), (1,1); W_n is Bernoulli(p_noise).
    """
    p0 = np.array([0.3, 0.8, 0.6, 0.1])
    return StructuralModel(
        x_transitions=np.column_stack([p0, 1.0 - p0]),
        z_probs=np.array([0.5, 0.5]),
        y_terms=(("x", 0), ("z", 3)),
        noise=float(p_noise),
        ell=2,
    )


def iid_model(alphabet: AlphabetSpec, probs=None) -> MarkovModel:
    """Order-0 model with iid joint symbols (uniform when ``probs`` is None)."""
    J = alphabet.joint
    p = np.full(J, 1.0 / J) if probs is None else np.asarray(probs, dtype=float).ravel()
    return MarkovModel(0, alphabet, p[None, :])


def _as_markov(model) -> MarkovModel:
    if isinstance(model, StructuralModel):
        return model.compile()
    if isinstance(model, MarkovModel):
        return model
    raise ModelError(f"not a model: {type(model).__name__}")


def _sampling_table(q: np.ndarray) -> np.ndarray:
    # symbol = number of entries <= u; entries from the last positive
    # probability onward are pushed to +inf so zero-mass tails never fire.
    cdf = np.cumsum(q, axis=1)
    last = q.shape[1] - 1 - np.argmax(q[:, ::-1] > 0, axis=1)
    cols = np.arange(q.shape[1])
    cdf[cols[None, :] >= last[:, None]] = np.inf
    return cdf


def _initial_context(model: MarkovModel, rng: np.random.Generator) -> int:
    cdf = np.cumsum(model.initial)
    return int(min(np.searchsorted(cdf, rng.random(), side="right"), cdf.size - 1))


def simulate_joint(model, length: int, seeds: Sequence, burn_in: int = BURN_IN) -> np.ndarray:
    """Joint symbol paths, one row per seed, after ``burn_in`` discarded steps.

    Every row depends only on its own seed, so results do not depend on how
    seeds are grouped into calls.
    """
    model = _as_markov(model)
    if length <= model.k:
        raise ModelError(f"length {length} must exceed the model order {model.k}")
    J, k = model.joint_size, model.k
    n_ctx = J**k
    cdf = _sampling_table(model.transitions)
    rngs = [np.random.default_rng(s) for s in seeds]
    state = np.array([_initial_context(model, r) for r in rngs], dtype=np.int64)
    total = burn_in + length
    dtype = np.int8 if J < 128 else np.int32
    out = np.empty((len(rngs), length), dtype=dtype)

    if len(rngs) == 1:
        rows = [list(r) for r in cdf]
        rng, s = rngs[0], int(state[0])
        pos = 0
        while pos < total:
            u = rng.random(min(_TIME_CHUNK, total - pos))
            syms = []
            for ui in u.tolist():
                j = bisect.bisect_right(rows[s], ui)
                syms.append(j)
                s = (s * J + j) % n_ctx
            lo = max(pos, burn_in)
            if pos + len(syms) > burn_in:
                out[0, lo - burn_in:pos + len(syms) - burn_in] = syms[lo - pos:]
            pos += len(syms)
        return out

    pos = 0
    while pos < total:
        step = min(_TIME_CHUNK, total - pos)
        u = np.stack([r.random(step) for r in rngs])
        for i in range(step):
            j = (cdf[state] <= u[:, i:i + 1]).sum(axis=1)
            state = (state * J + j) % n_ctx
            t_out = pos + i - burn_in
            if t_out >= 0:
                out[:, t_out] = j
        pos += step
    return out


def simulate(model, length: int, seed, burn_in: int = BURN_IN):
    """Simulate (x, y, z) of the given length; deterministic given ``seed``."""
    m = _as_markov(model)
    joint = simulate_joint(m, length, [seed], burn_in)[0]
    return m.decode(joint)


def simulate_many(model, length: int, seeds: Sequence, burn_in: int = BURN_IN):
    """Batch form of ``simulate``: arrays of shape (len(seeds), length)."""
    m = _as_markov(model)
    return m.decode(simulate_joint(m, length, seeds, burn_in))


@dataclass(frozen=True, eq=False)
class BlockChain:
    """First-order chain over K-blocks of joint symbols (K = ``order``)."""

    order: int
    model: MarkovModel
    successors: np.ndarray
    probs: np.ndarray

    @property
    def n_states(self) -> int:
        return self.successors.shape[0]

    def step(self, dist: np.ndarray) -> np.ndarray:
        w = (dist[:, None] * self.probs).ravel()
        return np.bincount(self.successors.ravel(), weights=w, minlength=self.n_states)

    def dense(self) -> np.ndarray:
        P = np.zeros((self.n_states, self.n_states))
        np.add.at(P, (np.repeat(np.arange(self.n_states), self.probs.shape[1]), self.successors.ravel()),
                  self.probs.ravel())
        return P


def lift_to_block_chain(model, k_eval: int) -> BlockChain:
    model = _as_markov(model)
    if k_eval < model.k:
        raise ModelError(f"evaluation order {k_eval} is below the model order {model.k}")
    J, K = model.joint_size, k_eval
    S = J**K
    states = np.arange(S, dtype=np.int64)
    succ = (states[:, None] * J + np.arange(J)[None, :]) % S
    ctx = states % (J**model.k)
    return BlockChain(K, model, succ, model.transitions[ctx])


def closed_classes(chain: BlockChain) -> list[np.ndarray]:
    S = chain.n_states
    mask = chain.probs.ravel() > 0
    rows = np.repeat(np.arange(S), chain.probs.shape[1])[mask]
    cols = chain.successors.ravel()[mask]
    graph = csr_matrix((np.ones(rows.size), (rows, cols)), shape=(S, S))
    n, labels = connected_components(graph, directed=True, connection="strong")
    leaks = labels[rows] != labels[cols]
    open_labels = set(labels[rows[leaks]].tolist())
    return [np.flatnonzero(labels == c) for c in range(n) if c not in open_labels]


def stationary_distribution(chain: BlockChain, tol: float = 1e-13, max_iter: int = 10**6) -> JointPmf:
    """Stationary law of the block chain over its unique closed class.

    Power iteration on the lazy chain (I + P) / 2, which has the same fixed
    point and is aperiodic. Returned as a pmf with K joint-symbol axes.
    """
    classes = closed_classes(chain)
    if len(classes) != 1:
        listing = "; ".join(str(c[:10].tolist()) for c in classes)
        raise ModelError(f"chain has {len(classes)} closed classes: {listing}")
    S = chain.n_states
    pi = np.zeros(S)
    pi[classes[0]] = 1.0 / classes[0].size
    for _ in range(max_iter):
        new = 0.5 * (pi + chain.step(pi))
        new /= new.sum()
        if np.abs(new - pi).sum() < tol:
            pi = new
            break
        pi = new
    else:
        raise ModelError(f"power iteration did not converge in {max_iter} steps")
    J = chain.model.joint_size
    shape = (J,) * chain.order if chain.order else (1,)
    return JointPmf(pi.reshape(shape))


def stationary_block_pmf(model, k_eval: int, drop_z: bool = False) -> JointPmf:
    """Stationary law of (k_eval+1)-blocks in the (x..., y..., z...) axis layout.

    With ``drop_z`` the Z axes are summed out and kept as singleton axes, the
    layout of a one-symbol confounder.
    """
    model = _as_markov(model)
    if k_eval < 0:
        raise ModelError(f"evaluation order must be >= 0, got {k_eval}")
    K = max(model.k, k_eval)
    J = model.joint_size
    if K == 0:
        seq = model.transitions[0]
    else:
        chain = lift_to_block_chain(model, K)
        pi = stationary_distribution(chain).probs.ravel()
        seq = (pi[:, None] * chain.probs).ravel()
    seq = seq.reshape((J,) * (K + 1))
    if K > k_eval:
        seq = seq.sum(axis=tuple(range(K - k_eval)))
    a = model.alphabet
    width = k_eval + 1
    table = seq.reshape((a.m, a.ell, a.t) * width)
    perm = [3 * i for i in range(width)] + [3 * i + 1 for i in range(width)] + [3 * i + 2 for i in range(width)]
    table = np.clip(table.transpose(perm), 0.0, None)
    if drop_z:
        table = table.sum(axis=tuple(range(2 * width, 3 * width)), keepdims=True)
    return JointPmf(table / table.sum())


def exact_ccdi_rate(model, k_eval: int, conditional: bool = True) -> float:
    """I(Y_0; X_{-k}^0 | Y_{-k}^{-1}, Z_{-k}^0) under the stationary law, k = k_eval.

    Equals the causal conditional directed information rate when (Y, Z) is
    itself Markov of order k_eval; otherwise it is the finite-memory functional.
    ``conditional=False`` gives the unconditioned (UC) version with Z ignored.
    """
    pmf = stationary_block_pmf(model, k_eval, drop_z=not conditional)
    a, b, c = ccdi_axes(k_eval)
    return conditional_mutual_information(pmf, a, b, c)


# --- model files -----------------------------------------------------------

def _floats(text: str, lineno: int) -> list[float]:
    try:
        return [float(v) for v in text.split()]
    except ValueError:
        raise ModelError(f"line {lineno}: expected numbers, got {text.strip()!r}") from None


def parse_model(text: str):
    """Parse the text model format; see docs/MANIFEST.md for the grammar."""
    fields: dict[str, tuple[int, str]] = {}
    rows: list[tuple[int, list[float]]] = []
    x_rows: list[tuple[int, list[float]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ModelError(f"line {lineno}: expected 'key: value'")
        key, value = (s.strip() for s in line.split(":", 1))
        if key == "row":
            rows.append((lineno, _floats(value, lineno)))
        elif key == "x-row":
            x_rows.append((lineno, _floats(value, lineno)))
        elif key in ("kind", "alphabet", "order", "initial", "z", "y", "noise"):
            fields[key] = (lineno, value)
        else:
            raise ModelError(f"line {lineno}: unknown key {key!r}")

    kind = fields.get("kind", (0, "table"))[1]
    if "alphabet" not in fields:
        raise ModelError("missing 'alphabet: m ell t'")
    ln, val = fields["alphabet"]
    dims = [int(v) for v in _floats(val, ln)]
    if len(dims) not in (2, 3):
        raise ModelError(f"line {ln}: alphabet needs 2 or 3 sizes")
    alphabet = AlphabetSpec(*dims)

    if kind == "table":
        if "order" not in fields:
            raise ModelError("missing 'order: k'")
        k = int(fields["order"][1])
        J = alphabet.joint
        if len(rows) != J**k:
            raise ModelError(f"expected {J**k} rows for order {k}, found {len(rows)}")
        for i, (ln, r) in enumerate(rows):
            if len(r) != J:
                raise ModelError(f"line {ln}: row {i} has {len(r)} entries, expected {J}")
            if min(r) < 0 or abs(sum(r) - 1.0) > 1e-9:
                raise ModelError(f"line {ln}: row {i} sums to {sum(r)!r}, not 1")
        q = np.array([r for _, r in rows])
        q /= q.sum(axis=1, keepdims=True)
        initial = None
        if "initial" in fields:
            ln, val = fields["initial"]
            initial = np.array(_floats(val, ln))
        return MarkovModel(k, alphabet, q, initial)

    if kind == "structural":
        for i, (ln, r) in enumerate(x_rows):
            if len(r) != alphabet.m or min(r) < 0 or abs(sum(r) - 1.0) > 1e-9:
                raise ModelError(f"line {ln}: X row {i} is not a distribution over {alphabet.m} symbols")
        if not x_rows:
            raise ModelError("structural model needs at least one 'x-row'")
        ln, val = fields.get("z", (0, " ".join(["1"] + ["0"] * (alphabet.t - 1))))
        z = _floats(val, ln)
        if len(z) != alphabet.t:
            raise ModelError(f"line {ln}: Z distribution needs {alphabet.t} entries")
        if "y" not in fields:
            raise ModelError("structural model needs a 'y' rule")
        ln, val = fields["y"]
        terms = []
        for part in val.split("+"):
            hit = _TERM.match(part)
            if not hit:
                raise ModelError(f"line {ln}: bad Y term {part.strip()!r}")
            terms.append((hit.group(1), int(hit.group(2))))
        noise = float(fields.get("noise", (0, "0"))[1])
        return StructuralModel(
            np.array([r for _, r in x_rows]), np.array(z), tuple(terms), noise, ell=alphabet.ell
        )
    raise ModelError(f"unknown model kind {kind!r}")


def load_model(path) -> MarkovModel | StructuralModel:
    return parse_model(Path(path).read_text())
