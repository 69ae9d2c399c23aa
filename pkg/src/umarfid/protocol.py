"""Tag, reader and back-end database state machines for UMA-RFID.

One authentication session between a synchronized tag and reader:

    tag    -> reader : IDT            (pseudonym, anonymous identification)
    reader -> tag    : A, B           (challenge built from key K and nonce N)
    tag    -> reader : C              (response, sent only if B verifies)

with messages

    A = K xor N
    B = rot(K, K) xor rot(N, N)
    C = (K or rot(N, N)) xor (rot(K, K) and N)

After a successful exchange both sides replace {IDT, K} with

    IDT' = K xor rot(N, N)
    K'   = rot(K, K) xor N

The tag keeps the pair it just used as "previous" so that a reader which
missed the final C can still identify it next session; the database keeps
a single pair per tag. The tag commits its update the moment it sends C,
the reader only after verifying C, which is the asymmetry every
desynchronization attack in this suite exploits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .word import Word, WordStream

MSG_IDT = "IDT"
MSG_A = "A"
MSG_B = "B"
MSG_C = "C"

TAG_TO_READER = "tag->reader"
READER_TO_TAG = "reader->tag"


def compute_a(key: Word, nonce: Word) -> Word:
    """First challenge half: key xor nonce."""
    return key ^ nonce


def compute_b(key: Word, nonce: Word) -> Word:
    """Second challenge half: rot(K, K) xor rot(N, N). Proves knowledge of K."""
    return key.rot(key) ^ nonce.rot(nonce)


def compute_c(key: Word, nonce: Word) -> Word:
    """Tag response: (K or rot(N, N)) xor (rot(K, K) and N)."""
    return (key | nonce.rot(nonce)) ^ (key.rot(key) & nonce)


@dataclass(frozen=True)
class PairState:
    """A {pseudonym, secret key} pair shared between tag and reader."""

    idt: Word
    key: Word

    def words(self) -> tuple[Word, Word]:
        return (self.idt, self.key)


def next_pair(used: PairState, nonce: Word) -> PairState:
    """Updated pair after a session that used `used` with nonce N."""
    key = used.key
    return PairState(
        idt=key ^ nonce.rot(nonce),
        key=key.rot(key) ^ nonce,
    )


@dataclass
class TagState:
    """Tag memory: static ID plus current and previous {IDT, K} pairs.

    Exactly 5 words of storage. The static ID is never transmitted.
    """

    id: Word
    current: PairState
    previous: PairState

    @classmethod
    def fresh(cls, id: Word, pair: PairState) -> "TagState":
        # A tag that has never updated has nothing older to remember.
        return cls(id=id, current=pair, previous=pair)

    def words(self) -> tuple[Word, ...]:
        return (self.id,) + self.current.words() + self.previous.words()

    def present(self, use_previous: bool = False) -> Word:
        """Pseudonym broadcast during identification. No state change."""
        return self.previous.idt if use_previous else self.current.idt

    def pair(self, use_previous: bool) -> PairState:
        return self.previous if use_previous else self.current

    def respond(self, use_previous: bool, a: Word, b: Word) -> Word | None:
        """Verify the reader's challenge and answer with C, or stay silent.

        Recovers N' = a xor K from the selected pair, recomputes B and
        compares with the received b. On a match the tag sends C and
        immediately commits its update: the used pair becomes previous,
        next_pair(used, N') becomes current. On a mismatch it returns
        None and keeps its state bit-identical.
        """
        used = self.pair(use_previous)
        nonce = a ^ used.key
        if compute_b(used.key, nonce) != b:
            return None
        c = compute_c(used.key, nonce)
        self.previous = used
        self.current = next_pair(used, nonce)
        return c


@dataclass
class DatabaseEntry:
    """Back-end record for one tag: {IDT, K, ID}, exactly 3 words."""

    idt: Word
    key: Word
    id: Word

    def words(self) -> tuple[Word, Word, Word]:
        return (self.idt, self.key, self.id)

    def pair(self) -> PairState:
        return PairState(idt=self.idt, key=self.key)


@dataclass
class _Pending:
    """In-flight reader session: matched entry, nonce, expected response."""

    entry: DatabaseEntry
    nonce: Word
    expected_c: Word


class ReaderState:
    """Reader plus back-end database, keyed by pseudonym."""

    def __init__(self):
        self.entries: dict[Word, DatabaseEntry] = {}
        self.pending: _Pending | None = None

    def register(self, entry: DatabaseEntry) -> None:
        if entry.idt in self.entries:
            raise ValueError(f"pseudonym collision on registration: {entry.idt}")
        self.entries[entry.idt] = entry

    def knows(self, idt: Word) -> bool:
        """Read-only lookup, used by identification and the Test query."""
        return idt in self.entries

    def begin(self, idt: Word, rng: WordStream) -> tuple[Word, Word] | None:
        """Look up the pseudonym and issue a challenge, or None if unknown.

        On a hit, draws a fresh nonce, remembers the expected C and
        returns (A, B). An unknown pseudonym is a normal protocol signal
        (the tag will retry with its previous one), not a fault.
        """
        if self.pending is not None:
            raise RuntimeError("reader already has a session in flight")
        entry = self.entries.get(idt)
        if entry is None:
            return None
        nonce = rng.next_word()
        self.pending = _Pending(
            entry=entry,
            nonce=nonce,
            expected_c=compute_c(entry.key, nonce),
        )
        return compute_a(entry.key, nonce), compute_b(entry.key, nonce)

    def complete(self, c: Word) -> bool:
        """Check the tag's response; update the database entry on success.

        Calling with no session in flight is a harness bug.
        """
        if self.pending is None:
            raise RuntimeError("reader_complete called with no pending session")
        pending, self.pending = self.pending, None
        if c != pending.expected_c:
            return False
        entry = pending.entry
        updated = next_pair(entry.pair(), pending.nonce)
        if updated.idt != entry.idt:
            if updated.idt in self.entries:
                raise ValueError(f"pseudonym collision on update: {updated.idt}")
            del self.entries[entry.idt]
            self.entries[updated.idt] = entry
        entry.idt = updated.idt
        entry.key = updated.key
        return True

    def abandon(self) -> None:
        """Drop the in-flight session without updating (C never arrived)."""
        self.pending = None


class Outcome(str, Enum):
    MUTUAL_SUCCESS = "mutual-success"
    READER_REJECTED_TAG = "reader-rejected-tag"
    TAG_REJECTED_READER = "tag-rejected-reader"
    IDENTIFICATION_FAILED = "identification-failed"
    BLOCKED = "blocked"

    def __str__(self) -> str:  # plain value in reports
        return self.value


DELIVERED = "delivered"
BLOCKED = "blocked"
REPLACED = "replaced"


@dataclass(frozen=True)
class ChannelEvent:
    """One radio transmission as an eavesdropper sees it."""

    session: int
    direction: str  # TAG_TO_READER or READER_TO_TAG
    label: str  # IDT, A, B or C
    payload: Word  # what the sender emitted
    disposition: str = DELIVERED
    replacement: Word | None = None  # delivered payload when replaced

    def delivered_payload(self) -> Word | None:
        if self.disposition == BLOCKED:
            return None
        if self.disposition == REPLACED:
            return self.replacement
        return self.payload

    def line(self) -> str:
        """Fixed-order structured-text record for transcript dumps."""
        out = (
            f"session={self.session} direction={self.direction} "
            f"message={self.label} word={self.payload.to_hex()} "
            f"disposition={self.disposition}"
        )
        if self.replacement is not None:
            out += f" replacement={self.replacement.to_hex()}"
        return out


def _event(session, label, payload, disposition, replacement=None) -> ChannelEvent:
    direction = TAG_TO_READER if label in (MSG_IDT, MSG_C) else READER_TO_TAG
    return ChannelEvent(
        session=session,
        direction=direction,
        label=label,
        payload=payload,
        disposition=disposition,
        replacement=replacement,
    )


class Channel:
    """Interception rules an active adversary has placed on the radio.

    A rule targets (session index, message label) and blocks the
    transmission, substitutes a fixed payload, or XORs a mask into the
    in-flight payload (bit flipping). Rules apply to every matching
    transmission of that session.
    """

    _BLOCK = "block"
    _REPLACE = "replace"
    _FLIP = "flip"

    def __init__(self):
        self._rules: dict[tuple[int, str], tuple[str, Word | None]] = {}

    def block(self, session: int, label: str) -> None:
        self._rules[(session, label)] = (self._BLOCK, None)

    def replace(self, session: int, label: str, payload: Word) -> None:
        self._rules[(session, label)] = (self._REPLACE, payload)

    def flip(self, session: int, label: str, mask: Word) -> None:
        """Alter the message in flight by XORing a mask into it."""
        self._rules[(session, label)] = (self._FLIP, mask)

    def apply(self, session: int, label: str, payload: Word) -> ChannelEvent:
        rule = self._rules.get((session, label))
        if rule is None:
            return _event(session, label, payload, DELIVERED)
        action, word = rule
        if action == self._BLOCK:
            return _event(session, label, payload, BLOCKED)
        replacement = payload ^ word if action == self._FLIP else word
        if replacement.width != payload.width:
            raise ValueError("replacement word has wrong length")
        return _event(session, label, payload, REPLACED, replacement)


@dataclass
class SessionTranscript:
    """Everything observable on the radio during one session."""

    session: int
    presented_idts: list[Word] = field(default_factory=list)
    a: Word | None = None
    b: Word | None = None
    c: Word | None = None
    outcome: Outcome = Outcome.BLOCKED
    events: list[ChannelEvent] = field(default_factory=list)

    def transmissions(self) -> int:
        """Channel sends, with {A, B} grouped as a single transmission."""
        count = len(self.presented_idts)
        if self.a is not None or self.b is not None:
            count += 1
        if self.c is not None:
            count += 1
        return count

    def lines(self) -> list[str]:
        out = [event.line() for event in self.events]
        out.append(f"session={self.session} outcome={self.outcome}")
        return out


def run_honest_session(
    reader: ReaderState,
    tag: TagState,
    rng: WordStream,
    channel: Channel | None = None,
    session: int = 0,
) -> SessionTranscript:
    """Drive one full protocol session between genuine endpoints.

    Identification presents the current pseudonym first; if the reader
    does not recognize it, the tag retries exactly once with its
    previous pseudonym. Both pseudonyms unknown is the observable
    desynchronization state. The optional channel may block or replace
    any message; every transmission is recorded in the transcript.
    """
    t = SessionTranscript(session=session)

    def transmit(label: str, payload: Word) -> Word | None:
        if channel is None:
            event = _event(session, label, payload, DELIVERED)
        else:
            event = channel.apply(session, label, payload)
        t.events.append(event)
        return event.delivered_payload()

    # Identification: current pseudonym, then one retry with the previous.
    use_previous = False
    challenge = None
    for attempt in range(2):
        idt = tag.present(use_previous)
        t.presented_idts.append(idt)
        received = transmit(MSG_IDT, idt)
        if received is None:
            t.outcome = Outcome.BLOCKED
            return t
        challenge = reader.begin(received, rng)
        if challenge is not None:
            break
        if use_previous:
            t.outcome = Outcome.IDENTIFICATION_FAILED
            return t
        use_previous = True
    if challenge is None:  # pragma: no cover - loop always resolves
        t.outcome = Outcome.IDENTIFICATION_FAILED
        return t

    t.a, t.b = challenge
    a_recv = transmit(MSG_A, t.a)
    b_recv = transmit(MSG_B, t.b)
    if a_recv is None or b_recv is None:
        reader.abandon()
        t.outcome = Outcome.BLOCKED
        return t

    session_key = tag.pair(use_previous).key
    c = tag.respond(use_previous, a_recv, b_recv)
    if c is None:
        reader.abandon()
        t.outcome = Outcome.TAG_REJECTED_READER
        return t
    t.c = c

    c_recv = transmit(MSG_C, c)
    if c_recv is None:
        reader.abandon()
        t.outcome = Outcome.BLOCKED
        return t

    if reader.complete(c_recv):
        t.outcome = Outcome.MUTUAL_SUCCESS
        # Transcript identity: B xor next pseudonym equals rot(K, K) xor K
        # for the pair the session used. Holds on every honest success.
        assert t.b ^ tag.current.idt == session_key.rot(session_key) ^ session_key
    else:
        t.outcome = Outcome.READER_REJECTED_TAG
    return t


def synchronized(reader: ReaderState, tag: TagState) -> bool:
    """Ground truth: can this tag still authenticate against this reader?

    True when the database entry under one of the tag's pseudonyms
    carries the matching key and identity.
    """
    for pair in (tag.current, tag.previous):
        entry = reader.entries.get(pair.idt)
        if entry is not None and entry.key == pair.key and entry.id == tag.id:
            return True
    return False


def fresh_system(
    init: WordStream, word_len: int, n_tags: int = 1
) -> tuple[ReaderState, list[TagState]]:
    """Reader plus n freshly initialized, registered tags.

    Each tag gets an independently drawn ID, pseudonym and key.
    """
    reader = ReaderState()
    tags = []
    for _ in range(n_tags):
        id = init.next_word()
        pair = PairState(idt=init.next_word(), key=init.next_word())
        tag = TagState.fresh(id=id, pair=pair)
        reader.register(DatabaseEntry(idt=pair.idt, key=pair.key, id=id))
        tags.append(tag)
    return reader, tags
