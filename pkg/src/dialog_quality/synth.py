"""Synthetic labeled dialog corpus generator.

Generates deterministic corpora from four interaction patterns: a fatal turn
buried in an otherwise fine dialog (defect), a rephrase loop where the user
repeats a failed request (defect), a refinement chain where the user narrows
a succeeding request (non-defect, but its early turns look defective to a
turn-level scorer), and clean dialogs (non-defect). Turn scores follow each
pattern's signature: fatal dialogs have one high score away from the last
turn among low scores, rephrase loops have consecutive high scores, and
refinement chains start high and end low.

Short dialogs are deliberately harder: a length-dependent share of fatal and
refinement dialogs is generated in an "ambiguous" mode that draws text and
score shape from one shared pool, so no feature can separate them there. Long
dialogs carry the most pattern-specific evidence. Rephrase loops are
abandoned (ending on a failure) more often when short.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .dialogs import Dialog, RawUtteranceEvent, Turn
from .tld import TldScoreMap

PATTERNS = ("fatal_turn", "rephrase_loop", "refinement_chain", "clean")

_LENGTH_CHOICES = (2, 3, 4, 5, 6, 7, 8, 9, 10)
_LENGTH_WEIGHTS = (30, 25, 14, 10, 6, 5, 4, 3, 3)

_BASE_TIMESTAMP = 1_700_000_000

_FATAL_RESPONSES = (
    "i am having trouble accessing your information. try again later",
    "something went wrong while processing that request. try again later",
    "i ran into a problem completing that. please try again later",
)

_REPHRASE_FAILURES = (
    "sorry, i don't have an answer for that",
    "sorry, i didn't catch that. can you say it again",
    "hmm, i don't know that one",
)

_AMBIGUOUS_USERS = (
    "what about that one",
    "can you check that again",
    "what was that from before",
    "try the other one",
    "do that one more time",
    "and the one after that",
)

_AMBIGUOUS_SYSTEMS = (
    "here is what i found",
    "okay, here are the results",
    "this is the best match i have",
    "showing the top result now",
)


@dataclass(frozen=True)
class _Topic:
    name: str
    clean: tuple[tuple[str, str], ...]
    rephrase_chains: tuple[tuple[str, ...], ...]
    rephrase_resolution: str
    refine_base: tuple[str, str]
    refine_user: str  # template with {mod}
    refine_system: str  # template with {mod}
    refine_mods: tuple[str, ...]


_TOPICS = (
    _Topic(
        name="package_tracking",
        clean=(
            ("where is my package", "two packages for your order arrive today by ten pm"),
            ("notify me when my order ships", "okay, i will notify you when it ships"),
            ("track my recent order", "your order is out for delivery this afternoon"),
            ("did my package get delivered", "yes, it was delivered to your front door at noon"),
            ("when does my return window close", "your return window closes next friday"),
        ),
        rephrase_chains=(
            (
                "when is the delivery gonna be here",
                "when is my delivery going to get here",
                "when will my package arrive",
                "what day does my package come",
            ),
            (
                "whats in my package",
                "what is inside my package",
                "what items are in my package",
                "list the items in my package",
            ),
        ),
        rephrase_resolution="your toothbrush, shampoo and three more items should arrive by friday",
        refine_base=("show me my orders", "here are your recent orders"),
        refine_user="show only the {mod} orders",
        refine_system="here are the {mod} orders from your history",
        refine_mods=(
            "electronics", "grocery", "digital", "gift", "returned",
            "delivered", "pending", "subscription", "archived",
        ),
    ),
    _Topic(
        name="shopping",
        clean=(
            ("how much does a dozen eggs cost", "a dozen eggs costs three dollars"),
            ("add paper towels to my cart", "added paper towels to your cart"),
            ("reorder my usual coffee", "okay, reordering your usual coffee"),
            ("is the blender in stock", "yes, the blender is in stock and ships today"),
            ("whats the price of bananas", "bananas are sixty cents a pound"),
        ),
        rephrase_chains=(
            (
                "how much does milk cost",
                "what is the price of milk",
                "tell me the cost of milk",
                "milk price please",
            ),
            (
                "add bread to the list",
                "put bread on my list",
                "bread on the shopping list please",
                "add a loaf of bread to my list",
            ),
        ),
        rephrase_resolution="a gallon of milk costs six dollars",
        refine_base=("how much does milk cost", "a gallon of milk costs six dollars"),
        refine_user="how much does {mod} milk cost",
        refine_system="a gallon of {mod} milk costs seven dollars",
        refine_mods=(
            "organic", "whole", "oat", "lactose free", "two percent",
            "almond", "skim", "goat", "soy",
        ),
    ),
    _Topic(
        name="music",
        clean=(
            ("play some road trip music", "playing your road trip playlist"),
            ("turn up the volume a little", "volume is now at seven"),
            ("whats this song called", "this song is called golden hour"),
            ("add this song to my favorites", "added to your favorites"),
            ("skip to the next track", "skipping to the next track"),
        ),
        rephrase_chains=(
            (
                "play the new album by the lumineers",
                "play the latest lumineers album",
                "put on the newest album from the lumineers",
                "start the most recent lumineers record",
            ),
            (
                "play my workout mix",
                "start the workout mix",
                "put on my workout playlist",
                "play the playlist called workout",
            ),
        ),
        rephrase_resolution="okay, playing the newest album by the lumineers",
        refine_base=("play some jazz", "playing jazz for you"),
        refine_user="play {mod} jazz instead",
        refine_system="okay, switching to {mod} jazz",
        refine_mods=(
            "smooth", "piano", "upbeat", "acoustic", "instrumental",
            "classic", "modern", "vocal", "late night",
        ),
    ),
    _Topic(
        name="weather",
        clean=(
            ("whats the weather right now", "it is seventy degrees and sunny right now"),
            ("do i need an umbrella today", "no rain is expected today"),
            ("how windy is it outside", "winds are calm at five miles per hour"),
            ("whats the air quality today", "air quality is good today"),
            ("when is sunset tonight", "sunset is at eight twelve tonight"),
        ),
        rephrase_chains=(
            (
                "is it gonna rain today",
                "will it rain today",
                "any rain coming today",
                "whats the chance of rain today",
            ),
            (
                "hows the weather this weekend",
                "weather for the weekend please",
                "what will the weekend weather be",
                "give me the weekend forecast",
            ),
        ),
        rephrase_resolution="there is a forty percent chance of rain after four pm",
        refine_base=("whats the forecast", "today looks sunny with a high of seventy two"),
        refine_user="what about {mod}",
        refine_system="{mod} looks clear with a high of seventy two",
        refine_mods=(
            "tomorrow", "tonight", "this weekend", "next week", "friday",
            "saturday morning", "sunday", "monday evening", "the afternoon",
        ),
    ),
    _Topic(
        name="timer",
        clean=(
            ("set a timer for ten minutes", "timer set for ten minutes"),
            ("how much time is left", "four minutes left on your timer"),
            ("cancel the oven timer", "oven timer canceled"),
            ("set an alarm for seven am", "alarm set for seven am"),
            ("snooze the alarm", "snoozing for nine minutes"),
        ),
        rephrase_chains=(
            (
                "set a second timer for five minutes",
                "start another timer for five minutes",
                "add a new five minute timer",
                "one more timer five minutes",
            ),
            (
                "pause the timer",
                "hold the timer",
                "stop the timer for now",
                "freeze the timer",
            ),
        ),
        rephrase_resolution="second timer set for five minutes",
        refine_base=("set a timer for ten minutes", "timer set for ten minutes"),
        refine_user="make it {mod} instead",
        refine_system="okay, changed the timer to {mod}",
        refine_mods=(
            "fifteen minutes", "twenty minutes", "half an hour", "five minutes",
            "an hour", "twelve minutes", "eight minutes", "twenty five minutes",
            "forty minutes",
        ),
    ),
    _Topic(
        name="knowledge",
        clean=(
            ("how tall is mount everest", "mount everest is about twenty nine thousand feet tall"),
            ("who wrote pride and prejudice", "pride and prejudice was written by jane austen"),
            ("what is the capital of japan", "the capital of japan is tokyo"),
            ("how many ounces in a cup", "there are eight ounces in a cup"),
            ("what year did the moon landing happen", "the first moon landing was in nineteen sixty nine"),
        ),
        rephrase_chains=(
            (
                "whats the score of the giants game",
                "giants game score please",
                "how are the giants doing right now",
                "current score for the giants",
            ),
            (
                "how do you spell necessary",
                "spell the word necessary",
                "spelling of necessary please",
                "can you spell necessary for me",
            ),
        ),
        rephrase_resolution="the giants are leading four to two in the seventh inning",
        refine_base=("find me pasta recipes", "here are some popular pasta recipes"),
        refine_user="only {mod} ones please",
        refine_system="here are {mod} pasta recipes",
        refine_mods=(
            "vegetarian", "gluten free", "quick", "creamy", "spicy",
            "baked", "one pot", "low carb", "vegan",
        ),
    ),
    _Topic(
        name="smart_home",
        clean=(
            ("turn on the living room lights", "living room lights are on"),
            ("set the thermostat to sixty eight", "thermostat set to sixty eight"),
            ("lock the front door", "front door is locked"),
            ("is the garage door closed", "yes, the garage door is closed"),
            ("start the robot vacuum", "starting the robot vacuum"),
        ),
        rephrase_chains=(
            (
                "dim the bedroom lights",
                "turn down the bedroom lights",
                "lower the lights in the bedroom",
                "make the bedroom lights dimmer",
            ),
            (
                "turn off the porch light",
                "switch off the porch light",
                "porch light off please",
                "kill the porch light",
            ),
        ),
        rephrase_resolution="bedroom lights dimmed to thirty percent",
        refine_base=("turn on the lights", "lights are on"),
        refine_user="just the {mod} lights",
        refine_system="okay, only the {mod} lights are on",
        refine_mods=(
            "kitchen", "hallway", "porch", "garage", "office",
            "basement", "upstairs", "backyard", "den",
        ),
    ),
)


@dataclass(frozen=True)
class CorpusSpec:
    """Size, pattern mix (fractions summing to 1), and seed for a corpus."""

    n_dialogs: int
    mix: dict[str, float]
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_dialogs < 0:
            raise ValueError("n_dialogs must be >= 0")
        unknown = set(self.mix) - set(PATTERNS)
        if unknown:
            raise ValueError(f"unknown patterns in mix: {sorted(unknown)}")
        if any(v < 0 for v in self.mix.values()):
            raise ValueError("mix fractions must be >= 0")
        if abs(sum(self.mix.values()) - 1.0) > 1e-9:
            raise ValueError(f"mix fractions must sum to 1, got {sum(self.mix.values())}")


@dataclass(frozen=True)
class SynthDialog:
    dialog: Dialog
    rating: int
    label: bool
    pattern: str


def _pattern_counts(spec: CorpusSpec) -> dict[str, int]:
    # largest-remainder apportionment so counts sum exactly to n_dialogs
    raw = {p: spec.mix.get(p, 0.0) * spec.n_dialogs for p in PATTERNS}
    counts = {p: int(raw[p]) for p in PATTERNS}
    remaining = spec.n_dialogs - sum(counts.values())
    by_remainder = sorted(PATTERNS, key=lambda p: (counts[p] - raw[p], PATTERNS.index(p)))
    for p in by_remainder[:remaining]:
        counts[p] += 1
    return counts


def _ambiguity_rate(n_turns: int) -> float:
    if n_turns <= 3:
        return 0.60
    if n_turns <= 6:
        return 0.18
    return 0.0


def _abandon_rate(n_turns: int) -> float:
    if n_turns <= 3:
        return 0.45
    if n_turns <= 6:
        return 0.25
    return 0.05


def _low(rng: random.Random) -> float:
    return round(rng.uniform(0.01, 0.13), 4)


def _spike(rng: random.Random) -> float:
    return round(rng.uniform(0.75, 0.92), 4)


def _clean_pair(rng: random.Random, topic: _Topic) -> tuple[str, str]:
    return rng.choice(topic.clean)


def _ambiguous_dialog(rng: random.Random, n: int) -> tuple[list[tuple[str, str]], list[float]]:
    """Shared text pool and score shape for short fatal/refinement confusables."""
    pairs = [
        (rng.choice(_AMBIGUOUS_USERS), rng.choice(_AMBIGUOUS_SYSTEMS))
        for _ in range(n)
    ]
    spike_at = 0 if n == 2 else rng.randint(0, n - 2)
    scores = [_low(rng) for _ in range(n)]
    scores[spike_at] = _spike(rng)
    return pairs, scores


def _fatal_dialog(rng: random.Random, topic: _Topic, n: int) -> tuple[list[tuple[str, str]], list[float]]:
    fatal_at = 0 if n == 2 else rng.randint(0, n - 2)
    pairs = []
    scores = []
    for i in range(n):
        user, system = _clean_pair(rng, topic)
        if i == fatal_at:
            system = rng.choice(_FATAL_RESPONSES)
            scores.append(_spike(rng))
        else:
            scores.append(_low(rng))
        pairs.append((user, system))
    return pairs, scores


def _rephrase_dialog(rng: random.Random, topic: _Topic, n: int) -> tuple[list[tuple[str, str]], list[float]]:
    if n <= 2:
        attempts = 1
    elif n <= 6:
        attempts = 2
    else:
        attempts = 3
    chain = rng.choice(topic.rephrase_chains)
    abandoned = rng.random() < _abandon_rate(n)
    failure = rng.choice(_REPHRASE_FAILURES)
    block: list[tuple[str, str]] = [(chain[i], failure) for i in range(attempts)]
    block_scores = [round(rng.uniform(0.85, 0.99), 4) for _ in range(attempts)]
    if abandoned:
        filler = n - attempts
        pairs = [_clean_pair(rng, topic) for _ in range(filler)] + block
        scores = [_low(rng) for _ in range(filler)] + block_scores
    else:
        resolution = (chain[attempts], topic.rephrase_resolution)
        filler = n - attempts - 1
        pairs = block + [resolution] + [_clean_pair(rng, topic) for _ in range(filler)]
        scores = block_scores + [round(rng.uniform(0.02, 0.1), 4)]
        scores.extend(_low(rng) for _ in range(filler))
    return pairs, scores


def _refinement_dialog(rng: random.Random, topic: _Topic, n: int) -> tuple[list[tuple[str, str]], list[float]]:
    mods = list(topic.refine_mods)
    rng.shuffle(mods)
    pairs = [topic.refine_base]
    for mod in mods[: n - 1]:
        pairs.append(
            (topic.refine_user.format(mod=mod), topic.refine_system.format(mod=mod))
        )
    scores = [round(rng.uniform(0.72, 0.92), 4)]
    scores.extend(round(rng.uniform(0.55, 0.85), 4) for _ in range(n - 2))
    scores.append(round(rng.uniform(0.05, 0.18), 4))
    return pairs, scores[:n]


def _clean_dialog(rng: random.Random, topic: _Topic, n: int) -> tuple[list[tuple[str, str]], list[float]]:
    pairs = [_clean_pair(rng, topic) for _ in range(n)]
    return pairs, [_low(rng) for _ in range(n)]


def generate_corpus(spec: CorpusSpec) -> tuple[list[SynthDialog], TldScoreMap]:
    """Generate a deterministic labeled corpus and its turn-score map."""
    rng = random.Random(spec.seed)
    counts = _pattern_counts(spec)
    assignments = [p for p in PATTERNS for _ in range(counts[p])]
    rng.shuffle(assignments)
    rows: list[SynthDialog] = []
    score_entries: dict[str, float] = {}
    for i, pattern in enumerate(assignments):
        topic = rng.choice(_TOPICS)
        n = rng.choices(_LENGTH_CHOICES, weights=_LENGTH_WEIGHTS, k=1)[0]
        ambiguous = pattern in ("fatal_turn", "refinement_chain") and (
            rng.random() < _ambiguity_rate(n)
        )
        if pattern == "clean":
            pairs, scores = _clean_dialog(rng, topic, n)
        elif pattern == "fatal_turn":
            if ambiguous:
                pairs, scores = _ambiguous_dialog(rng, n)
            else:
                pairs, scores = _fatal_dialog(rng, topic, n)
        elif pattern == "rephrase_loop":
            pairs, scores = _rephrase_dialog(rng, topic, n)
        else:
            if ambiguous:
                pairs, scores = _ambiguous_dialog(rng, n)
            else:
                pairs, scores = _refinement_dialog(rng, topic, n)
        label = pattern in ("fatal_turn", "rephrase_loop")
        rating = rng.choice((1, 2, 2, 3)) if label else rng.choice((4, 4, 5))
        user_id = f"synth-u{i:05d}"
        start = _BASE_TIMESTAMP + i * 1000
        timestamp = start
        turns = []
        for j, (user_text, system_text) in enumerate(pairs):
            turn_id = f"{user_id}-{start}-t{j + 1}"
            turns.append(
                Turn(
                    index=j + 1,
                    event=RawUtteranceEvent(
                        user_id=user_id,
                        timestamp=timestamp,
                        turn_id=turn_id,
                        user_text=user_text,
                        system_text=system_text,
                        use_case=topic.name,
                    ),
                )
            )
            score_entries[turn_id] = scores[j]
            timestamp += rng.randint(5, 170)
        dialog = Dialog(
            dialog_id=f"{user_id}-{start}",
            user_id=user_id,
            use_case=topic.name,
            turns=tuple(turns),
        )
        rows.append(SynthDialog(dialog=dialog, rating=rating, label=label, pattern=pattern))
    return rows, TldScoreMap(score_entries)
