"""End-to-end signalling protocol between Alice's basis choice and Bob's cloner.

Alice encodes a bit in her choice of measurement basis; each choice steers
Bob's half of a shared pair into one of two preparation ensembles. Bob
feeds his state to a cloner, keeps attempts the cloner reports as
successes, splits the claimed copies into one verification group per
candidate state, and projects every clone in group l onto candidate l.
A single all-success group selects that candidate's column; anything else
lands in the junk column. Tallying columns per basis choice estimates the
conditional probabilities that decide whether the channel carries
information.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import qcore
from .entangle import (
    AliceBasis,
    SharedState,
    alice_measure,
    build_shared_state,
    induced_ensemble,
)
from .errors import CapacityError, ConfigError, DimensionError, LabelError
from .pqcm import (
    CloneOutput,
    IllegalClonerSpec,
    PqcmMachine,
    apply_machine,
    illegal_clone,
)
from .qcore import Ket, SeededRng

PHI = 0  # sentinel column: no single verification group succeeded

_PHASE_PROTOCOL = 0
_PHASE_CHANNEL = 1
_PHASE_VOTE = 2
_PHASE_MESSAGE = 3


def _stream_id(phase: int, setting: int, index: int) -> int:
    return (phase << 44) | (setting << 40) | index


def group_sizes(mu: int, n_groups: int) -> list[int]:
    """Deterministic partition: earlier groups absorb the remainder."""
    base, extra = divmod(mu, n_groups)
    return [base + 1] * extra + [base] * (n_groups - extra)


def _measure_clone(
    vec: np.ndarray,
    lead_dim: int,
    clone_dim: int,
    copies: int,
    clone_idx: int,
    onto: np.ndarray,
    rng: SeededRng,
) -> tuple[bool, np.ndarray]:
    """Binary Born-rule projection of one clone factor, with collapse."""
    pre = lead_dim * clone_dim**clone_idx
    post = clone_dim ** (copies - clone_idx - 1)
    block = vec.reshape(pre, clone_dim, post)
    amp = np.einsum("d,pdq->pq", onto.conj(), block)
    p_succ = min(float(np.real(np.vdot(amp, amp))), 1.0)
    success = rng.random() < p_succ
    if success:
        collapsed = np.einsum("d,pq->pdq", onto, amp).reshape(-1)
    else:
        collapsed = (block - np.einsum("d,pq->pdq", onto, amp)).reshape(-1)
    norm = np.linalg.norm(collapsed)
    if norm < 1e-15:
        # a zero branch is reachable only through roundoff at p in {0, 1}
        return success, vec
    return success, collapsed / norm


def group_verify(
    clones: CloneOutput, candidates: Sequence[Ket], mu: int, rng: SeededRng
) -> int:
    """Classify a cloner output into a candidate column or the junk column.

    The mu claimed copies are split into one group per candidate (earlier
    groups one larger when mu is not divisible). Every clone in group l is
    tested by a binary projective measurement onto candidate l. The
    verdict is column l (1-based) when group l alone is all-success, and
    PHI when no group or more than one group is.

    Product-form outputs are tested clone by clone with independent
    draws; joint outputs are measured by sequential collapse; the junk
    marker fails every projection by construction.
    """
    candidates = tuple(candidates)
    n_groups = len(candidates)
    if mu < n_groups:
        raise ConfigError(f"need at least {n_groups} copies, got {mu}")
    if clones.copies != mu:
        raise ConfigError(
            f"clone record carries {clones.copies} copies, expected {mu}"
        )
    sizes = group_sizes(mu, n_groups)

    if clones.kind == "junk":
        return PHI

    if clones.kind == "copies":
        single = clones.single
        overlaps = np.array(
            [abs(qcore.inner_product(c, single)) ** 2 for c in candidates]
        )
        thresholds = np.repeat(overlaps, sizes)
        hits = rng.uniforms(mu) < thresholds
        all_success = []
        start = 0
        for size in sizes:
            all_success.append(bool(np.all(hits[start : start + size])))
            start += size
    elif clones.kind == "joint":
        for c in candidates:
            if c.dim != clones.clone_dim:
                raise DimensionError(
                    f"candidate dim {c.dim} does not match clone dim {clones.clone_dim}"
                )
        vec = clones.state.amplitudes
        all_success = []
        clone_idx = 0
        for l, size in enumerate(sizes):
            group_ok = True
            for _ in range(size):
                ok, vec = _measure_clone(
                    vec,
                    clones.lead_dim,
                    clones.clone_dim,
                    mu,
                    clone_idx,
                    candidates[l].amplitudes,
                    rng,
                )
                group_ok = group_ok and ok
                clone_idx += 1
            all_success.append(group_ok)
    else:
        raise ConfigError(f"unknown clone record kind {clones.kind!r}")

    winners = [l for l, ok in enumerate(all_success) if ok]
    if len(winners) == 1:
        return winners[0] + 1
    return PHI


def guess_rule(column: int, n: int) -> int | None:
    """Bob's decoding: columns 1..N mean bit 0, column N+1 means bit 1.

    The junk column gives no verdict (None, an abstention).
    """
    if column == PHI:
        return None
    if 1 <= column <= n:
        return 0
    if column == n + 1:
        return 1
    raise ConfigError(f"column {column} outside 1..{n + 1}")


@dataclass(frozen=True, eq=False)
class TallyTable:
    """Empirical column counts per preparation, plus per-setting totals."""

    n: int
    counts: np.ndarray  # shape (2N, N+2); last column is PHI
    classified: tuple  # events classified per setting
    discards: tuple  # cloner failures discarded per setting
    trials: tuple  # pairs drawn per setting

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2 * self.n, self.n + 2):
            raise DimensionError(
                f"tally shape {counts.shape} does not match n={self.n}"
            )
        if np.any(counts < 0):
            raise ConfigError("tally counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True, eq=False)
class SignalStats:
    """Estimated conditional column probabilities and the derived bit rates."""

    n: int
    p_col: np.ndarray  # shape (2, N+2): P(column | setting), last column PHI
    p0_a1: float
    p1_a1: float
    p0_a2: float
    p1_a2: float
    stderr_p0_a1: float
    stderr_p1_a1: float
    stderr_p0_a2: float
    stderr_p1_a2: float
    accuracy: float  # correct guesses / non-abstain guesses, both settings pooled
    classified: tuple
    discard_rate: tuple
    leakage: float  # analytic misclassification bound for exact copies

    def __post_init__(self):
        p = np.asarray(self.p_col, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p_col", p)


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything one signalling run needs, including its random seed."""

    bob_states: tuple
    a2_basis: AliceBasis
    mu: int
    trials: int
    pairs_per_bit: int
    machine: PqcmMachine | IllegalClonerSpec
    seed: int

    def __post_init__(self):
        bob_states = tuple(self.bob_states)
        n = len(bob_states)
        if self.mu < n + 1:
            raise ConfigError(f"mu must be at least N+1 = {n + 1}, got {self.mu}")
        if self.trials < 1:
            raise ConfigError("need at least one trial")
        if self.pairs_per_bit < 1:
            raise ConfigError("pairs_per_bit must be at least 1")
        if self.a2_basis.dim != n:
            raise ConfigError("alternate basis dimension does not match state count")
        if isinstance(self.machine, PqcmMachine):
            if self.machine.copies != self.mu:
                raise ConfigError(
                    f"machine produces {self.machine.copies} copies, "
                    f"config wants {self.mu}"
                )
            if self.machine.dim != n:
                raise ConfigError("machine dimension does not match state count")
        elif isinstance(self.machine, IllegalClonerSpec):
            if self.machine.copies != self.mu:
                raise ConfigError(
                    f"cloner promises {self.machine.copies} copies, "
                    f"config wants {self.mu}"
                )
            if self.machine.total_labels != 2 * n:
                raise ConfigError(
                    f"cloner expects {self.machine.total_labels} labels, "
                    f"run has {2 * n}"
                )
        else:
            raise ConfigError("machine must be a PqcmMachine or IllegalClonerSpec")
        object.__setattr__(self, "bob_states", bob_states)

    @property
    def n(self) -> int:
        return len(self.bob_states)


@dataclass(frozen=True)
class RunContext:
    """Derived, reusable pieces of one protocol configuration."""

    shared: SharedState
    bases: tuple  # (A1, A2)
    candidates: tuple  # B_1 .. B_{N+1}
    all_states: tuple  # B_1 .. B_{2N}


def prepare_context(config: ProtocolConfig) -> RunContext:
    shared = build_shared_state(config.bob_states)
    a1 = AliceBasis.computational(config.n)
    ens2 = induced_ensemble(shared, config.a2_basis)
    second_set = tuple(m[0] for m in ens2.members)
    return RunContext(
        shared=shared,
        bases=(a1, config.a2_basis),
        candidates=config.bob_states + (second_set[0],),
        all_states=config.bob_states + second_set,
    )


def _run_one_pair(
    config: ProtocolConfig, ctx: RunContext, setting: int, rng: SeededRng
) -> tuple[int, int | None]:
    """One shared pair: Alice measures, the cloner runs, Bob classifies.

    Returns (input row 0-based, column), column None when the cloner
    reported failure and the pair is discarded.
    """
    outcome, bob_state = alice_measure(ctx.shared, ctx.bases[setting], rng)
    row = setting * config.n + outcome
    if isinstance(config.machine, IllegalClonerSpec):
        out = illegal_clone(config.machine, row + 1, ctx.all_states, rng)
    else:
        success, ket = apply_machine(config.machine, bob_state, rng)
        if not success:
            return row, None
        out = CloneOutput.joint_state(ket, config.mu, config.n)
    column = group_verify(out, ctx.candidates, config.mu, rng)
    return row, column


def _tally_range(
    config: ProtocolConfig, ctx: RunContext, setting: int, start: int, stop: int
) -> tuple[np.ndarray, int, int]:
    n = config.n
    counts = np.zeros((2 * n, n + 2), dtype=np.int64)
    classified = 0
    discards = 0
    for t in range(start, stop):
        rng = SeededRng(config.seed, _stream_id(_PHASE_PROTOCOL, setting, t))
        row, column = _run_one_pair(config, ctx, setting, rng)
        if column is None:
            discards += 1
            continue
        col_idx = n + 1 if column == PHI else column - 1
        counts[row, col_idx] += 1
        classified += 1
    return counts, classified, discards


def analytic_leakage(candidates: Sequence[Ket], mu: int) -> float:
    """Worst-case probability that exact copies miss their own column.

    For exact copies of candidate l, group l always succeeds, so the only
    losses are ties: some other group j all-succeeding, each with
    probability |<B_j|B_l>|^(2 g_j).
    """
    candidates = tuple(candidates)
    sizes = group_sizes(mu, len(candidates))
    worst = 0.0
    for l, cand in enumerate(candidates):
        stay = 1.0
        for j, other in enumerate(candidates):
            if j == l:
                continue
            overlap = abs(qcore.inner_product(other, cand)) ** 2
            stay *= 1.0 - overlap ** sizes[j]
        worst = max(worst, 1.0 - stay)
    return worst


def run_protocol(
    config: ProtocolConfig, threads: int = 1
) -> tuple[TallyTable, SignalStats]:
    """Estimate the empirical tally and signalling statistics for one config.

    Each shared pair owns a counter-based random stream keyed by (seed,
    setting, trial index), and all accumulation is integer counting, so
    results are bit-identical for a fixed seed no matter how trials are
    scheduled across threads.
    """
    ctx = prepare_context(config)
    n = config.n
    counts = np.zeros((2 * n, n + 2), dtype=np.int64)
    classified = [0, 0]
    discards = [0, 0]

    jobs: list[tuple[int, int, int]] = []
    chunk = max(1, -(-config.trials // max(1, threads)))
    for setting in (0, 1):
        for start in range(0, config.trials, chunk):
            jobs.append((setting, start, min(start + chunk, config.trials)))

    if threads > 1 and len(jobs) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_tally_range, config, ctx, setting, start, stop)
                for setting, start, stop in jobs
            ]
            parts = [f.result() for f in futures]
    else:
        parts = [
            _tally_range(config, ctx, setting, start, stop)
            for setting, start, stop in jobs
        ]
    for (setting, _, _), (part_counts, part_classified, part_discards) in zip(
        jobs, parts
    ):
        counts += part_counts
        classified[setting] += part_classified
        discards[setting] += part_discards

    tally = TallyTable(
        n=n,
        counts=counts,
        classified=tuple(classified),
        discards=tuple(discards),
        trials=(config.trials, config.trials),
    )
    stats = stats_from_tally(tally, analytic_leakage(ctx.candidates, config.mu))
    return tally, stats


def stats_from_tally(tally: TallyTable, leakage: float) -> SignalStats:
    """Conditional column probabilities and bit rates from raw counts."""
    n = tally.n
    p_col = np.zeros((2, n + 2))
    for setting in (0, 1):
        total = tally.classified[setting]
        if total == 0:
            raise ConfigError(
                f"no cloner successes for setting A{setting + 1}; cannot estimate"
            )
        rows = tally.counts[setting * n : (setting + 1) * n]
        p_col[setting] = rows.sum(axis=0) / total

    def rate_and_err(setting: int, cols: slice) -> tuple[float, float]:
        total = tally.classified[setting]
        p = float(p_col[setting, cols].sum())
        return p, float(np.sqrt(max(p * (1.0 - p), 0.0) / total))

    p0_a1, se0_a1 = rate_and_err(0, slice(0, n))
    p1_a1, se1_a1 = rate_and_err(0, slice(n, n + 1))
    p0_a2, se0_a2 = rate_and_err(1, slice(0, n))
    p1_a2, se1_a2 = rate_and_err(1, slice(n, n + 1))

    correct = int(tally.counts[0:n, 0:n].sum() + tally.counts[n : 2 * n, n].sum())
    decided = int(tally.counts[:, 0 : n + 1].sum())
    accuracy = correct / decided if decided else 0.5

    return SignalStats(
        n=n,
        p_col=p_col,
        p0_a1=p0_a1,
        p1_a1=p1_a1,
        p0_a2=p0_a2,
        p1_a2=p1_a2,
        stderr_p0_a1=se0_a1,
        stderr_p1_a1=se1_a1,
        stderr_p0_a2=se0_a2,
        stderr_p1_a2=se1_a2,
        accuracy=accuracy,
        classified=tally.classified,
        discard_rate=(
            tally.discards[0] / tally.trials[0],
            tally.discards[1] / tally.trials[1],
        ),
        leakage=leakage,
    )


# ---------------------------------------------------------------------------
# classical channel built on repeated pairs and majority voting


@dataclass(frozen=True)
class ChannelResult:
    accuracy: float
    sent: tuple
    decoded: tuple
    coin_flip_blocks: int  # blocks decided by coin flip (all-abstain or tie)


def channel_accuracy(
    pair_results: Iterable[tuple[int, int | None]],
    pairs_per_bit: int,
    rng: SeededRng,
) -> ChannelResult:
    """Majority-vote decoding of consecutive blocks of per-pair guesses.

    ``pair_results`` yields (sent bit, guess) with guess in {0, 1, None};
    abstentions carry no vote. Blocks with no votes or a tie are decided
    by a fair coin and counted in ``coin_flip_blocks``.
    """
    if pairs_per_bit < 1:
        raise ConfigError("pairs_per_bit must be at least 1")
    sent: list[int] = []
    decoded: list[int] = []
    coin_flips = 0
    block: list[tuple[int, int | None]] = []
    for item in pair_results:
        block.append(item)
        if len(block) < pairs_per_bit:
            continue
        bits = {b for b, _ in block}
        if len(bits) != 1:
            raise ConfigError("a voting block must carry a single sent bit")
        votes = [g for _, g in block if g is not None]
        ones = sum(votes)
        zeros = len(votes) - ones
        if ones > zeros:
            verdict = 1
        elif zeros > ones:
            verdict = 0
        else:
            verdict = int(rng.random() < 0.5)
            coin_flips += 1
        sent.append(block[0][0])
        decoded.append(verdict)
        block = []
    if block:
        raise ConfigError("pair stream length must be a multiple of pairs_per_bit")
    if not sent:
        raise ConfigError("no complete blocks to decode")
    hits = sum(int(s == d) for s, d in zip(sent, decoded))
    return ChannelResult(
        accuracy=hits / len(sent),
        sent=tuple(sent),
        decoded=tuple(decoded),
        coin_flip_blocks=coin_flips,
    )


def run_channel(config: ProtocolConfig, message_bits: Sequence[int]) -> ChannelResult:
    """Send a bit string through the cloner channel and decode by blocks.

    Every message bit consumes ``pairs_per_bit`` shared pairs measured in
    the basis encoding that bit; cloner failures become abstentions.
    """
    ctx = prepare_context(config)

    def stream() -> Iterable[tuple[int, int | None]]:
        for block_idx, bit in enumerate(message_bits):
            for pair in range(config.pairs_per_bit):
                index = block_idx * config.pairs_per_bit + pair
                rng = SeededRng(config.seed, _stream_id(_PHASE_CHANNEL, bit, index))
                _, column = _run_one_pair(config, ctx, bit, rng)
                yield bit, None if column is None else guess_rule(column, config.n)

    vote_rng = SeededRng(config.seed, _stream_id(_PHASE_VOTE, 0, 0))
    return channel_accuracy(stream(), config.pairs_per_bit, vote_rng)


def random_message(seed: int, n_bits: int) -> tuple[int, ...]:
    """Deterministic uniformly random bit string for channel demos."""
    rng = SeededRng(seed, _stream_id(_PHASE_MESSAGE, 0, 0))
    return tuple(int(rng.random() < 0.5) for _ in range(n_bits))


def analytic_no_signal_certificate(
    bob_states, basis_a: AliceBasis, basis_b: AliceBasis
) -> float:
    """Trace distance between Bob's averaged states for two Alice bases.

    The two Alice-averaged density matrices coincide identically, so the
    returned value is numerical noise (at most ~1e-12): the certificate
    that basis choice alone sends no information.
    """
    shared = build_shared_state(tuple(bob_states))
    rho_a = induced_ensemble(shared, basis_a).average_density()
    rho_b = induced_ensemble(shared, basis_b).average_density()
    return qcore.trace_distance(rho_a, rho_b)


# ---------------------------------------------------------------------------
# explicit joint-state realization of the illegal cloner's output


def materialize_illegal_output(
    spec: IllegalClonerSpec, input_label: int, all_states: Sequence[Ket]
) -> tuple[CloneOutput, tuple[Ket, ...]]:
    """Build the output decomposition as one explicit joint ket.

    Branches are kept exactly decoherent: each clonable branch lives
    behind its own orthogonal flag level, every clone factor gains one
    extra level reserved for junk, and the junk branch puts all clones in
    that level so each projective test fails with certainty. Measuring
    the result clone by clone therefore reproduces the branch-sampling
    statistics. Returns the joint record plus the candidate kets embedded
    into the enlarged clone space.
    """
    all_states = tuple(all_states)
    if len(all_states) != spec.total_labels:
        raise LabelError(
            f"expected {spec.total_labels} preparation states, got {len(all_states)}"
        )
    if not 1 <= input_label <= spec.total_labels:
        raise LabelError(f"label {input_label} outside 1..{spec.total_labels}")
    candidates = tuple(all_states[l - 1] for l in spec.clonable_labels)
    n = candidates[0].dim
    k = len(candidates)
    clone_dim = n + 1
    lead_dim = k + 1
    total_dim = lead_dim * clone_dim**spec.copies
    if total_dim > qcore.MAX_DIM:
        raise CapacityError(
            f"materialized dimension {total_dim} exceeds cap {qcore.MAX_DIM}"
        )

    amps = np.zeros(k + 1, dtype=np.complex128)
    if input_label in spec.clonable_labels:
        amps[spec.clonable_labels.index(input_label)] = 1.0
    elif input_label in spec.coefficients:
        c_arr, junk_amp = spec.coefficients[input_label]
        amps[:k] = c_arr
        amps[k] = junk_amp
    else:
        amps[k] = 1.0  # default: pure junk

    embedded = []
    for cand in candidates:
        padded = np.zeros(clone_dim, dtype=np.complex128)
        padded[:n] = cand.amplitudes
        embedded.append(Ket(padded))
    junk_level = np.zeros(clone_dim, dtype=np.complex128)
    junk_level[n] = 1.0

    vec = np.zeros(total_dim, dtype=np.complex128)
    block = clone_dim**spec.copies
    for flag in range(lead_dim):
        if amps[flag] == 0:
            continue
        factor = embedded[flag].amplitudes if flag < k else junk_level
        product = factor
        for _ in range(spec.copies - 1):
            product = np.kron(product, factor)
        vec[flag * block : (flag + 1) * block] = amps[flag] * product

    out = CloneOutput.joint_state(
        Ket.normalized(vec), spec.copies, clone_dim, lead_dim=lead_dim
    )
    return out, tuple(embedded)
