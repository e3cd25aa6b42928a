"""Simulated semi-honest two-party computation substrate.

Additive secret sharing over an odd prime field, Beaver-triple
multiplication, and the gadgets the noise protocols rely on: a shared
Bernoulli draw, a shared uniform draw, a shared sign test, and a mux.

The simulator holds both parties' shares, so gadget innards (comparison
circuits, bit decompositions) are evaluated directly on the reconstructed
value and the result is re-shared with a fresh dealer mask.  What remains
faithful to a real deployment is (a) the data flow -- which values are
opened, which stay shared, and what each party's view contains -- and
(b) the cost accounting, which uses the documented constants below so
ledgers are reproducible.

Randomness discipline: the two party tapes feed only the joint public
coins (XOR-combined 64-bit words for Bernoulli and uniform draws), while
all masks, triples, and re-sharing randomness come from a dealer tape
derived deterministically from the two party seeds.  Opened protocol
outputs therefore depend on the party tapes alone, which is what lets a
plaintext functionality run on the same word stream reproduce them
bit for bit.

Cost model (abstract operation counts, not wall-clock):

* open: 1 round, 2 field elements.
* input sharing: 1 round, 1 element (owner sends the mask).
* Beaver mul: 1 multiplication, 1 round, 4 elements, 1 triple.
* comparison (sign test / threshold test): 1 comparison; internally a
  64-bit bit-decomposition with log-depth prefix evaluation, costed as
  8 rounds (ceil(log2 64) + 2) and 128 elements.  Its boolean-domain
  gates are not counted as field multiplications.
* uniform draw over 2^k: 1 round, 2k elements (each party shares its k
  bit contributions); non-powers of two add one comparison plus one
  opened accept bit per rejection attempt.
* power-of-two truncation by gamma bits: 2 rounds, 2*gamma elements.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..grids import FieldConfig
from ..tape import RandomTape, bernoulli_threshold, pow2_at_least

OPEN_ROUNDS, OPEN_ELEMENTS = 1, 2
SHARE_ROUNDS, SHARE_ELEMENTS = 1, 1
MUL_ROUNDS, MUL_ELEMENTS = 1, 4
CMP_ROUNDS, CMP_ELEMENTS = 8, 128
UNI_ROUNDS = 1
TRUNC_ROUNDS = 2

_MIX0 = 0x9E3779B97F4A7C15
_MIX1 = 0xC2B2AE3D27D4EB4F


class ContractViolation(RuntimeError):
    """A shared value left the range a gadget is specified for."""


@dataclass(frozen=True)
class Share:
    """One party's additive share of a field element."""

    party: int
    value: int


class SharedValue:
    """Both parties' shares of one field element (simulator-side handle)."""

    __slots__ = ("s0", "s1")

    def __init__(self, s0: int, s1: int):
        self.s0 = s0
        self.s1 = s1

    def share(self, party: int) -> Share:
        return Share(party, self.s0 if party == 0 else self.s1)

    def __repr__(self):
        return f"SharedValue({self.s0}, {self.s1})"


@dataclass
class CostLedger:
    """Abstract complexity counts for one session; monotone within a session."""

    multiplications: int = 0
    comparisons: int = 0
    bernoulli_draws: int = 0
    uniform_draws: int = 0
    rounds: int = 0
    elements_exchanged: int = 0

    def as_dict(self) -> dict:
        return {
            "multiplications": self.multiplications,
            "comparisons": self.comparisons,
            "bernoulli_draws": self.bernoulli_draws,
            "uniform_draws": self.uniform_draws,
            "rounds": self.rounds,
            "elements_exchanged": self.elements_exchanged,
        }

    def snapshot(self) -> dict:
        return self.as_dict()

    def delta(self, before: dict) -> dict:
        return {k: v - before[k] for k, v in self.as_dict().items()}


class TripleStore:
    """Queue of Beaver triples produced by the simulated trusted dealer."""

    def __init__(self, q: int, dealer: RandomTape, batch: int = 64):
        self.q = q
        self._dealer = dealer
        self._batch = batch
        self._queue: list[tuple[int, int, int, int, int, int]] = []
        self.refills = 0
        self.consumed = 0

    def _refill(self) -> None:
        q = self.q
        draws = self._dealer.field_elements(q, 5 * self._batch)
        for i in range(0, len(draws), 5):
            a, b, a0, b0, c0 = draws[i : i + 5]
            c = a * b % q
            self._queue.append((a0, (a - a0) % q, b0, (b - b0) % q, c0, (c - c0) % q))
        self.refills += 1

    def take(self) -> tuple[int, int, int, int, int, int]:
        if not self._queue:
            self._refill()
        self.consumed += 1
        return self._queue.pop()


def dealer_seed(seed0: int, seed1: int) -> int:
    """Deterministic dealer seed from the two party seeds (splitmix-style)."""
    return ((seed0 * _MIX0) ^ (seed1 * _MIX1) ^ 0xDEA1) % (1 << 63)


class Session:
    """One deterministic two-party computation session.

    All public parameters (field, thresholds) are common to both logical
    parties; every output and the ledger are a pure function of
    (seed0, seed1, inputs).  A session is single-threaded; run independent
    sessions for parallel batches.
    """

    def __init__(
        self,
        fieldcfg: FieldConfig,
        seed0: int = 0,
        seed1: int = 1,
        *,
        tape0: RandomTape | None = None,
        tape1: RandomTape | None = None,
        record_transcript: bool = False,
    ):
        self.field = fieldcfg
        self.q = fieldcfg.q
        self.tape0 = tape0 if tape0 is not None else RandomTape(seed0)
        self.tape1 = tape1 if tape1 is not None else RandomTape(seed1)
        self.dealer = RandomTape(dealer_seed(seed0, seed1))
        self.triples = TripleStore(self.q, self.dealer)
        self.ledger = CostLedger()
        self.record_transcript = record_transcript
        # transcript[p] = field elements received by party p, in order
        self.transcript: tuple[list[int], list[int]] = ([], [])
        # sign tests are only sound while |value| stays below this bound
        self.safe_magnitude = 2 ** (fieldcfg.p + fieldcfg.e + fieldcfg.headroom - 1)

    # -- wires ---------------------------------------------------------

    def _recv(self, party: int, value: int) -> None:
        if self.record_transcript:
            self.transcript[party].append(value)

    def joint_word(self) -> int:
        """XOR of one fresh 64-bit word from each party's tape."""
        return self.tape0.word() ^ self.tape1.word()

    def _reshare(self, value: int) -> SharedValue:
        """Fresh additive sharing of a value using a dealer mask."""
        r = self.dealer.field_element(self.q)
        return SharedValue((value - r) % self.q, r)

    # -- sharing and opening --------------------------------------------

    def share(self, v: int, owner: int = 0) -> SharedValue:
        """Share a field element held by `owner`; costs one sent element."""
        r = self.dealer.field_element(self.q)
        self.ledger.rounds += SHARE_ROUNDS
        self.ledger.elements_exchanged += SHARE_ELEMENTS
        self._recv(1 - owner, r)
        if owner == 0:
            return SharedValue((v - r) % self.q, r)
        return SharedValue(r, (v - r) % self.q)

    def share_public(self, v: int) -> SharedValue:
        """Zero-cost sharing of a publicly known constant."""
        return SharedValue(v % self.q, 0)

    def open(self, sv: SharedValue) -> int:
        """Exchange shares and return the balanced reconstruction."""
        self.ledger.rounds += OPEN_ROUNDS
        self.ledger.elements_exchanged += OPEN_ELEMENTS
        self._recv(0, sv.s1)
        self._recv(1, sv.s0)
        return self.field.lift(sv.s0 + sv.s1)

    def peek(self, sv: SharedValue) -> int:
        """Simulator-only reconstruction; no communication, no ledger."""
        return self.field.lift(sv.s0 + sv.s1)

    # -- local linear algebra (communication-free) -----------------------

    def add(self, a: SharedValue, b: SharedValue) -> SharedValue:
        return SharedValue((a.s0 + b.s0) % self.q, (a.s1 + b.s1) % self.q)

    def sub(self, a: SharedValue, b: SharedValue) -> SharedValue:
        return SharedValue((a.s0 - b.s0) % self.q, (a.s1 - b.s1) % self.q)

    def add_public(self, a: SharedValue, c: int) -> SharedValue:
        return SharedValue((a.s0 + c) % self.q, a.s1)

    def scale_public(self, a: SharedValue, c: int) -> SharedValue:
        return SharedValue(a.s0 * c % self.q, a.s1 * c % self.q)

    def affine(self, a: SharedValue, scale: int, offset: int) -> SharedValue:
        return SharedValue((a.s0 * scale + offset) % self.q, a.s1 * scale % self.q)

    # -- interactive gadgets ---------------------------------------------

    def mul(self, a: SharedValue, b: SharedValue) -> SharedValue:
        """Beaver multiplication: one triple, one round, four elements."""
        q = self.q
        ta0, ta1, tb0, tb1, tc0, tc1 = self.triples.take()
        d0, d1 = (a.s0 - ta0) % q, (a.s1 - ta1) % q
        e0, e1 = (b.s0 - tb0) % q, (b.s1 - tb1) % q
        self.ledger.multiplications += 1
        self.ledger.rounds += MUL_ROUNDS
        self.ledger.elements_exchanged += MUL_ELEMENTS
        if self.record_transcript:
            self._recv(0, d1)
            self._recv(0, e1)
            self._recv(1, d0)
            self._recv(1, e0)
        d = (d0 + d1) % q
        e = (e0 + e1) % q
        s0 = (tc0 + d * tb0 + e * ta0 + d * e) % q
        s1 = (tc1 + d * tb1 + e * ta1) % q
        return SharedValue(s0, s1)

    def mux(self, i: SharedValue, a: SharedValue, b: SharedValue) -> SharedValue:
        """[a] + [i]*([b] - [a]): a when i=0, b when i=1; one multiplication."""
        assert self.peek(i) in (0, 1), "mux selector must be a shared bit"
        return self.add(a, self.mul(i, self.sub(b, a)))

    def pi_bersample(self, prob: float) -> SharedValue:
        """Shared Bernoulli bit with the given public success probability.

        Each party contributes one fresh 64-bit word; the XOR-combined
        word is compared to the 64-bit threshold inside a shared
        comparison, so neither party learns the bit.  Bias <= 2^-64.
        """
        return self.pi_bersample_thresholded(bernoulli_threshold(prob))

    def pi_bersample_thresholded(self, threshold: int) -> SharedValue:
        u = self.joint_word()
        bit = 1 if u < threshold else 0
        led = self.ledger
        led.bernoulli_draws += 1
        led.comparisons += 1
        led.rounds += CMP_ROUNDS
        led.elements_exchanged += CMP_ELEMENTS
        return self._reshare(bit)

    def pi_uni(self, m: int) -> SharedValue:
        """Shared uniform draw over {0, ..., m-1}.

        Powers of two combine party-contributed bits with zero bias; other
        moduli reject on the next power of two, revealing only the
        accept/reject bit of each attempt (independent of all secrets).
        """
        if m < 1:
            raise ValueError("m must be >= 1")
        led = self.ledger
        led.uniform_draws += 1
        if m == 1:
            return self.share_public(0)
        cap = pow2_at_least(m)
        k = cap.bit_length() - 1
        if cap == m:
            v = self.joint_word() & (m - 1)
            led.rounds += UNI_ROUNDS
            led.elements_exchanged += 2 * k
            return self._reshare(v)
        while True:
            v = self.joint_word() & (cap - 1)
            led.rounds += UNI_ROUNDS + CMP_ROUNDS + OPEN_ROUNDS
            led.elements_exchanged += 2 * k + CMP_ELEMENTS + OPEN_ELEMENTS
            led.comparisons += 1
            if v < m:
                return self._reshare(v)

    def pi_ge(self, sv: SharedValue) -> SharedValue:
        """Shared sign test: [1] if the balanced value is >= 0, else [0].

        The value must stay within the configured safe magnitude so the
        balanced lift is unambiguous.
        """
        val = self.peek(sv)
        if abs(val) > self.safe_magnitude:
            raise ContractViolation(
                f"pi_ge input {val} outside safe range +/-{self.safe_magnitude}"
            )
        led = self.ledger
        led.comparisons += 1
        led.rounds += CMP_ROUNDS
        led.elements_exchanged += CMP_ELEMENTS
        return self._reshare(1 if val >= 0 else 0)

    def trunc_pow2(self, sv: SharedValue, gamma: int) -> SharedValue:
        """Shared floor division by 2^gamma (drop the low gamma bits)."""
        if gamma < 0:
            raise ValueError("gamma must be >= 0")
        if gamma == 0:
            return sv
        val = self.peek(sv)
        if abs(val) > self.safe_magnitude:
            raise ContractViolation(
                f"trunc input {val} outside safe range +/-{self.safe_magnitude}"
            )
        self.ledger.rounds += TRUNC_ROUNDS
        self.ledger.elements_exchanged += 2 * gamma
        return self._reshare(val >> gamma)

    def transcript_dump(self) -> dict:
        """Audit dump of both parties' received elements, hex-encoded."""
        return {
            f"party{p}": [format(v, "x") for v in self.transcript[p]]
            for p in (0, 1)
        }
