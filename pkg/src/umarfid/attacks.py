"""Executable attacks against the UMA-RFID protocol.

Five procedures, each returning a report the harness verifies against
the simulator's hidden state (a report never self-certifies):

  * distinguish_strategy  - traceability: two eavesdrops plus one blocked
    C give a fingerprint that recognizes the victim tag in the challenge.
  * attack_full_disclosure - the current key is the XOR of three public
    words from two consecutive sessions.
  * attack_clone - extends disclosure to the full next pair and writes
    it into a blank tag that then authenticates as the original.
  * attack_desync_mitm - impersonates each party to the other within one
    session, feeding them different nonces; their updates diverge and
    never re-meet.
  * attack_desync_bitflip - replays an old challenge XORed with weight-2
    masks against the tag's previous pair until one sticks; the tag
    updates, the reader does not, and the old-pair fallback is burned.

Everything an attacker computes here comes from public transcripts;
blocks marked "ground truth" are harness-side verification reading
simulator state the attacker could not see.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .adversary import GameConfig, GameEnvironment, GameOutcome, run_untraceability_game
from .protocol import (
    MSG_C,
    Outcome,
    PairState,
    SessionTranscript,
    TagState,
    compute_b,
    compute_c,
    fresh_system,
    next_pair,
    run_honest_session,
    synchronized,
)
from .word import ProtocolParams, Word, WordStream, derive_seed


def recover_key(a_n: Word, b_n: Word, idt_next: Word) -> Word:
    """Current secret key from three public words of sessions n and n+1.

    A_n xor B_n xor IDT_{n+1} telescopes to rot(K_n, K_n) xor N_n, which
    is exactly the updated key. Pure formula; exact, not probabilistic.
    """
    return a_n ^ b_n ^ idt_next


@dataclass
class AttackReport:
    """Outcome of one attack trial, verified against ground truth."""

    attack: str
    success: bool
    recovered_key: Word | None = None
    recovered_nonce: Word | None = None
    cloned_pair: PairState | None = None
    c1_rounds: int | None = None  # mask redraw rounds (bit-flip attack)
    c2_trials: int | None = None  # tag interactions across all rounds
    a_mask: Word | None = None  # accepted weight-2 mask applied to A
    b_mask: Word | None = None  # accepted weight-2 mask applied to B
    hw_matched: bool | None = None  # masked nonce kept its hamming weight
    synchronized: bool | None = None  # post-attack tag/reader sync state
    followup_outcomes: tuple[str, ...] | None = None
    detail: str = ""


class Bench:
    """Single-tag lab for attack trials: reader, tag, seeded streams.

    Every trial builds its own bench from a derived seed, so trials are
    independent and reproducible in any execution order.
    """

    def __init__(self, word_len: int, seed: int):
        ProtocolParams(word_len=word_len, seed=seed)  # validate
        self.word_len = word_len
        init = WordStream(word_len, derive_seed(seed, "init"))
        self.reader, tags = fresh_system(init, word_len, n_tags=1)
        self.tag = tags[0]
        self.nonce_rng = WordStream(word_len, derive_seed(seed, "nonce"))
        self.adv_rng = WordStream(word_len, derive_seed(seed, "adv"))
        self.session = 0

    def run_honest(self, channel=None) -> SessionTranscript:
        t = run_honest_session(
            self.reader, self.tag, self.nonce_rng, channel=channel, session=self.session
        )
        self.session += 1
        return t

    def followup_outcomes(self, count: int) -> tuple[str, ...]:
        """Outcomes of `count` honest recovery attempts after an attack."""
        return tuple(str(self.run_honest().outcome) for _ in range(count))

    def synchronized(self) -> bool:
        return synchronized(self.reader, self.tag)


def distinguish_strategy(env: GameEnvironment) -> int:
    """Traceability game strategy: budgets (execute=2, send=1).

    Learning: eavesdrop two consecutive sessions of tag 0, blocking the
    final C of the second so the reader keeps the stale pair and tag 0
    must fall back to it later. B and the next pseudonym share the same
    rot(N, N) term, so their XOR is a nonce-free fingerprint of tag 0:
    rot(K, K) xor K. Challenge: if any revealed pseudonym reproduces
    that fingerprint against the stored B, the challenge tag is tag 0.

    With no send budget the block is skipped, the pseudonym the
    fingerprint predicts is consumed before the challenge, and the
    strategy degrades to a constant guess.
    """
    first = env.execute(0)
    if env.config.send_budget > 0:
        env.send(env.next_session, MSG_C)
    second = env.execute(0)
    fingerprint = first.b ^ second.presented_idts[0]
    for pseudonym in env.test():
        if first.b ^ pseudonym == fingerprint:
            return 0
    return 1


def attack_traceability(config: GameConfig, trial: int = 0) -> GameOutcome:
    """One untraceability game played with the distinguishing strategy."""
    return run_untraceability_game(distinguish_strategy, config, trial)


def attack_full_disclosure(bench: Bench) -> AttackReport:
    """Recover the tag's live secret key from two eavesdropped sessions."""
    first = bench.run_honest()
    # Ground truth: the key the next session will use, straight from tag memory.
    true_key = bench.tag.current.key
    second = bench.run_honest()
    if first.outcome is not Outcome.MUTUAL_SUCCESS or second.outcome is not Outcome.MUTUAL_SUCCESS:
        return AttackReport(attack="full-disclosure", success=False, detail="observation failed")
    recovered = recover_key(first.a, first.b, second.presented_idts[0])
    return AttackReport(
        attack="full-disclosure",
        success=recovered == true_key,
        recovered_key=recovered,
    )


def attack_clone(bench: Bench) -> AttackReport:
    """Build a working duplicate tag from two eavesdropped sessions.

    Recovers the key, then the second session's nonce from A, confirms
    both against the public B, computes the post-session pair and writes
    it into a blank tag. The bench then authenticates the clone against
    the genuine reader.
    """
    first = bench.run_honest()
    second = bench.run_honest()
    if first.outcome is not Outcome.MUTUAL_SUCCESS or second.outcome is not Outcome.MUTUAL_SUCCESS:
        return AttackReport(attack="clone", success=False, detail="observation failed")

    session_idt = second.presented_idts[0]
    key = recover_key(first.a, first.b, session_idt)
    nonce = key ^ second.a
    if compute_b(key, nonce) != second.b:
        return AttackReport(
            attack="clone",
            success=False,
            recovered_key=key,
            recovered_nonce=nonce,
            detail="challenge cross-check failed, observation corrupted",
        )
    cloned = next_pair(PairState(idt=session_idt, key=key), nonce)

    # Ground truth: the clone must hold exactly what the real tag holds now.
    pair_matches = cloned == bench.tag.current

    blank = TagState.fresh(id=Word.zeros(bench.word_len), pair=cloned)
    verification = run_honest_session(
        bench.reader, blank, bench.nonce_rng, session=bench.session
    )
    bench.session += 1
    return AttackReport(
        attack="clone",
        success=pair_matches and verification.outcome is Outcome.MUTUAL_SUCCESS,
        recovered_key=key,
        recovered_nonce=nonce,
        cloned_pair=cloned,
    )


def attack_desync_mitm(bench: Bench, followups: int = 3) -> AttackReport:
    """Desynchronize tag and reader by splitting one session in two.

    After one eavesdropped session the attacker knows the live key. In
    the next session it intercepts the reader's challenge, answers the
    reader itself with a correctly forged C, and challenges the tag with
    a different nonce of its own. Both parties accept and update, but
    under different nonces, leaving no shared pair. The old-pair
    fallback cannot recover because the tag's previous pair is the one
    the reader just replaced.
    """
    first = bench.run_honest()
    if first.outcome is not Outcome.MUTUAL_SUCCESS:
        return AttackReport(attack="desync-mitm", success=False, detail="observation failed")

    # Session under attack: tag broadcasts its pseudonym, reader answers,
    # attacker owns the radio in between.
    idt = bench.tag.present()
    key = recover_key(first.a, first.b, idt)
    challenge = bench.reader.begin(idt, bench.nonce_rng)
    if challenge is None:
        return AttackReport(attack="desync-mitm", success=False, detail="reader lookup miss")
    a_genuine, b_genuine = challenge

    genuine_nonce = key ^ a_genuine
    if compute_b(key, genuine_nonce) != b_genuine:
        bench.reader.abandon()
        return AttackReport(
            attack="desync-mitm",
            success=False,
            recovered_key=key,
            detail="challenge cross-check failed, observation corrupted",
        )

    # Attacker-chosen nonce for the tag; must differ from the genuine one.
    fake_nonce = bench.adv_rng.next_word()
    while fake_nonce == genuine_nonce:
        fake_nonce = bench.adv_rng.next_word()

    c_from_tag = bench.tag.respond(False, key ^ fake_nonce, compute_b(key, fake_nonce))
    tag_accepted = c_from_tag is not None  # tag updates under fake_nonce
    reader_accepted = bench.reader.complete(compute_c(key, genuine_nonce))
    bench.session += 1

    # Ground truth: no pair shared anymore, and recovery stays impossible.
    still_synchronized = bench.synchronized()
    outcomes = bench.followup_outcomes(followups)
    all_failed = all(o == str(Outcome.IDENTIFICATION_FAILED) for o in outcomes)
    return AttackReport(
        attack="desync-mitm",
        success=(
            tag_accepted
            and reader_accepted
            and not still_synchronized
            and all_failed
        ),
        recovered_key=key,
        recovered_nonce=genuine_nonce,
        synchronized=still_synchronized,
        followup_outcomes=outcomes,
    )


def weight2_words(width: int) -> Iterator[Word]:
    """Every width-bit word with exactly two set bits.

    Fixed enumeration order, lexicographic by (lower set bit, upper set
    bit), so attempt counts are reproducible. C(width, 2) words total.
    """
    for lo in range(width):
        for hi in range(lo + 1, width):
            yield Word((1 << lo) | (1 << hi), width)


def weight2_count(width: int) -> int:
    """Size of the per-round mask search space: C(width, 2)."""
    return width * (width - 1) // 2


def random_weight2(rng: WordStream, width: int) -> Word:
    """Uniform word of hamming weight exactly 2."""
    lo = rng.next_below(width)
    hi = rng.next_below(width)
    while hi == lo:
        hi = rng.next_below(width)
    return Word((1 << lo) | (1 << hi), width)


def required_b_mask(nonce: Word, a_mask: Word) -> Word:
    """Analysis side: the unique B-mask the tag would accept.

    Masking A by a_mask shifts the nonce the tag recovers to
    N xor a_mask; the B equality then demands exactly
    rot(N, N) xor rot(N xor a_mask, N xor a_mask) as the B-mask.
    """
    altered = nonce ^ a_mask
    return nonce.rot(nonce) ^ altered.rot(altered)


def bitflip_round_admits(nonce: Word, a_mask: Word) -> bool:
    """Analysis side: does any weight-2 B-mask exist for this round?

    True exactly when the required mask itself has weight 2. For a
    uniform nonce this happens with probability 1/2: the two flipped
    positions must hit one set and one clear bit.
    """
    return required_b_mask(nonce, a_mask).hamming_weight() == 2


def attack_desync_bitflip(
    bench: Bench, c1_round_cap: int = 64, followups: int = 3
) -> AttackReport:
    """Desynchronize with weight-2 replay masks, no key knowledge needed.

    Captures one full honest session, then poses as a reader. Feigning
    non-recognition of the tag's fresh pseudonym forces it onto the pair
    the captured session used. The attacker replays A xor mask_a and
    B xor mask_b for every weight-2 mask_b in fixed order; when the tag
    answers, it has updated off its previous pair while the reader kept
    its state, and no shared pair remains. Rounds whose mask_a changes
    the nonce's hamming weight admit no valid mask_b (about half), so
    the expected number of rounds is 2, capped as a safety net.
    """
    key_before = bench.tag.current.key  # ground truth snapshot
    captured = bench.run_honest()
    if captured.outcome is not Outcome.MUTUAL_SUCCESS:
        return AttackReport(attack="desync-bitflip", success=False, detail="observation failed")
    nonce_truth = captured.a ^ key_before  # ground truth, attacker never sees it

    width = bench.word_len
    tag = bench.tag
    c1_rounds = 0
    c2_trials = 0
    accepted: tuple[Word, Word] | None = None

    while accepted is None and c1_rounds < c1_round_cap:
        c1_rounds += 1
        a_mask = random_weight2(bench.adv_rng, width)
        forged_a = captured.a ^ a_mask
        for b_mask in weight2_words(width):
            c2_trials += 1
            # Rogue-reader dance: refuse the current pseudonym so the tag
            # falls back to the pair the captured session used.
            tag.present()
            replayed = tag.present(use_previous=True)
            if replayed != captured.presented_idts[0]:
                return AttackReport(
                    attack="desync-bitflip",
                    success=False,
                    c1_rounds=c1_rounds,
                    c2_trials=c2_trials,
                    detail="tag no longer holds the captured pair",
                )
            state_before = (tag.current, tag.previous)
            c = tag.respond(True, forged_a, captured.b ^ b_mask)
            if c is None:
                # Rejected probes must be side-effect free or the
                # enumeration would corrupt its own search space.
                if (tag.current, tag.previous) != state_before:
                    raise RuntimeError("tag state changed on a rejected probe")
                continue
            accepted = (a_mask, b_mask)
            break

    if accepted is None:
        return AttackReport(
            attack="desync-bitflip",
            success=False,
            c1_rounds=c1_rounds,
            c2_trials=c2_trials,
            detail=f"no accepting mask within {c1_round_cap} rounds",
        )

    a_mask, b_mask = accepted
    # Ground truth: weight condition of the accepted round and post-state.
    hw_matched = (
        (nonce_truth ^ a_mask).hamming_weight() == nonce_truth.hamming_weight()
    )
    still_synchronized = bench.synchronized()
    outcomes = bench.followup_outcomes(followups)
    all_failed = all(o == str(Outcome.IDENTIFICATION_FAILED) for o in outcomes)
    return AttackReport(
        attack="desync-bitflip",
        success=not still_synchronized and all_failed,
        c1_rounds=c1_rounds,
        c2_trials=c2_trials,
        a_mask=a_mask,
        b_mask=b_mask,
        hw_matched=hw_matched,
        synchronized=still_synchronized,
        followup_outcomes=outcomes,
    )


ATTACK_RECORD_FIELDS = [
    "trial",
    "attack",
    "success",
    "recovered_key",
    "recovered_nonce",
    "cloned_idt",
    "cloned_key",
    "c1_rounds",
    "c2_trials",
    "a_mask",
    "b_mask",
    "hw_matched",
    "synchronized",
    "followups",
    "detail",
]


def attack_record(report: AttackReport, trial: int) -> dict:
    """Flat serializable record for one attack trial, fixed field order."""

    def hx(w: Word | None):
        return None if w is None else w.to_hex()

    return {
        "trial": trial,
        "attack": report.attack,
        "success": report.success,
        "recovered_key": hx(report.recovered_key),
        "recovered_nonce": hx(report.recovered_nonce),
        "cloned_idt": hx(report.cloned_pair.idt if report.cloned_pair else None),
        "cloned_key": hx(report.cloned_pair.key if report.cloned_pair else None),
        "c1_rounds": report.c1_rounds,
        "c2_trials": report.c2_trials,
        "a_mask": hx(report.a_mask),
        "b_mask": hx(report.b_mask),
        "hw_matched": report.hw_matched,
        "synchronized": report.synchronized,
        "followups": (
            None
            if report.followup_outcomes is None
            else ";".join(report.followup_outcomes)
        ),
        "detail": report.detail,
    }
