"""Shared test utilities: brute-force oracles and a random scenario generator."""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from gazekit.core import Target, TargetKind
from gazekit.events import (
    RobotListeningEvent,
    RobotSpeakingEvent,
    Scenario,
    TargetMovedEvent,
    UserSpeakingEvent,
    WordTiming,
    event_duration_ms,
)

WORD_POOL = ["well", "so", "maybe", "this", "one", "goes", "here", "right",
             "next", "card", "then", "okay", "faster", "slower", "than"]
ANIMALS = ["zebra", "lion", "cheetah", "horse", "rabbit", "turtle", "eagle", "shark"]


def brute_force_finals(
    columns: Dict[str, List[float]],
    env_id: str,
    prev_current: Optional[str],
    frames: int,
) -> List[str]:
    """Independent per-frame argmax with the documented tie-break."""
    out = []
    prev = prev_current
    for j in range(frames):
        vals = {tid: (col[j] if j < len(col) else 0.0) for tid, col in columns.items()}
        best = max(vals.values()) if vals else 0.0
        if best == 0.0:
            choice = env_id
        else:
            tied = sorted(t for t, v in vals.items() if v == best)
            choice = prev if prev in tied else tied[0]
        out.append(choice)
        prev = choice
    return out


def longest_user_run(kinds_and_targets: List[Tuple[str, str]]) -> int:
    """Longest run of one user target in a (kind, target) sequence."""
    longest = cur = 0
    prev = None
    for kind, target in kinds_and_targets:
        if kind == "user" and target == prev:
            cur += 1
        elif kind == "user":
            cur = 1
        else:
            cur = 0
        prev = target if kind == "user" else None
        longest = max(longest, cur)
    return longest


def _make_words(rng: random.Random, n: int, mention: Optional[str],
                long_pause: bool) -> List[WordTiming]:
    words = []
    t = 0
    mention_at = rng.randrange(1, n) if mention else -1
    pause_at = rng.randrange(1, n) if long_pause else -1
    for i in range(n):
        text = mention if i == mention_at else rng.choice(WORD_POOL)
        dur = rng.randrange(1, 4) * 200
        words.append(WordTiming(text=text, start_ms=t, end_ms=t + dur))
        t += dur
        if i == pause_at:
            t += rng.randrange(5, 8) * 200  # 1000-1400 ms gap
        elif rng.random() < 0.2:
            t += 200
    return words


def make_random_scenario(seed: int, min_duration_ms: int = 62000) -> Scenario:
    """Conversation-shaped random scenario biased toward long user fixations."""
    rng = random.Random(seed)
    n_users = rng.choice([1, 2])
    n_cards = rng.randrange(2, 5)
    targets = []
    for u in range(n_users):
        targets.append(Target(
            id=f"user{u}", kind=TargetKind.USER,
            position=(round(rng.uniform(-0.5, 0.5), 3), round(rng.uniform(-0.1, 0.2), 3),
                      round(rng.uniform(1.0, 1.5), 3)),
            label=f"User{u}",
        ))
    aliases = rng.sample(ANIMALS, n_cards)
    for c in range(n_cards):
        targets.append(Target(
            id=f"card{c}", kind=TargetKind.TASK_OBJECT,
            position=(round(rng.uniform(-0.5, 0.5), 3), round(rng.uniform(-0.4, 0.0), 3),
                      round(rng.uniform(0.8, 1.2), 3)),
            label=aliases[c].capitalize(), aliases=[aliases[c]],
        ))
    users = [t.id for t in targets if t.kind == TargetKind.USER]
    cards = [t for t in targets if t.kind == TargetKind.TASK_OBJECT]

    timeline = []
    t = 0
    while t < min_duration_ms:
        roll = rng.random()
        if roll < 0.35:
            dur = rng.randrange(15, 45) * 200  # 3-9 s, long enough to trip intimacy
            ev = RobotListeningEvent(addressees=[rng.choice(users)], duration_ms=dur)
        elif roll < 0.6:
            dur = rng.randrange(8, 30) * 200
            mention = rng.choice(cards).aliases[0] if rng.random() < 0.5 else None
            rec = []
            if mention:
                s = rng.randrange(0, max(1, dur // 200 - 2)) * 200
                rec = [WordTiming(text=mention, start_ms=s, end_ms=s + 200)]
            ev = UserSpeakingEvent(speaker=rng.choice(users), duration_ms=dur,
                                   recognized_words=rec)
        elif roll < 0.85:
            mention = rng.choice(cards).aliases[0] if rng.random() < 0.5 else None
            words = _make_words(rng, rng.randrange(4, 12), mention, rng.random() < 0.3)
            ev = RobotSpeakingEvent(
                utterance=" ".join(w.text for w in words),
                words=words,
                yielding=rng.random() < 0.5,
                addressees=[rng.choice(users)],
            )
            dur = ev.duration_ms
        else:
            card = rng.choice(cards)
            n_wp = rng.randrange(2, 4)
            dur = rng.randrange(4, 11) * 200
            wps = [(0, card.position)]
            for k in range(1, n_wp):
                wps.append((dur * k // (n_wp - 1),
                            (round(rng.uniform(-0.5, 0.5), 3), round(rng.uniform(-0.4, 0.0), 3),
                             round(rng.uniform(0.8, 1.2), 3))))
            ev = TargetMovedEvent(target=card.id, waypoints=wps)
        timeline.append((t, ev))
        t += event_duration_ms(ev) + rng.randrange(0, 6) * 200

    return Scenario(seed=seed, targets=targets, timeline=timeline)
