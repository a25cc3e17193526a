#!/usr/bin/env python3
"""Generates the bundled two-class topic corpus (data/topics.jsonl).

Each class owns three subtopics of 20 words; 200 background words are shared.
A document picks a class and a primary subtopic, then draws every token from
its own class (mostly the primary subtopic), from a random subtopic of the
other class, or from the background, with Zipf-like weights inside each
group.
"""

import argparse
import json
import random

SYLLABLES = ["ba", "ko", "ri", "mu", "te", "sa", "lo", "ne", "vi", "da",
             "pe", "zu", "ha", "go", "fi", "ro", "ta", "mi", "ke", "nu"]


def make_words(rng, count, used):
    words = []
    while len(words) < count:
        w = "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3)))
        if w not in used:
            used.add(w)
            words.append(w)
    return words


def zipf_weights(n, s=1.0):
    return [1.0 / (k + 1) ** s for k in range(n)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--docs", type=int, default=2400)
    ap.add_argument("--seed", type=int, default=20260101)
    ap.add_argument("--subtopics", type=int, default=3)
    ap.add_argument("--topic-words", type=int, default=20)
    ap.add_argument("--background", type=int, default=200)
    ap.add_argument("--p-own", type=float, default=0.30)
    ap.add_argument("--p-primary", type=float, default=0.6)
    ap.add_argument("--p-other", type=float, default=0.10)
    ap.add_argument("--min-len", type=int, default=25)
    ap.add_argument("--max-len", type=int, default=50)
    ap.add_argument("--out", default="data/topics.jsonl")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    used = set()
    topics = [[make_words(rng, args.topic_words, used) for _ in range(args.subtopics)]
              for _ in range(2)]
    background = make_words(rng, args.background, used)
    tw = zipf_weights(args.topic_words)
    bw = zipf_weights(args.background)

    lines = []
    for i in range(args.docs):
        label = i % 2
        primary = rng.randrange(args.subtopics)
        length = rng.randint(args.min_len, args.max_len)
        tokens = []
        for _ in range(length):
            u = rng.random()
            if u < args.p_own:
                s = primary if rng.random() < args.p_primary else rng.randrange(args.subtopics)
                tokens.append(rng.choices(topics[label][s], tw)[0])
            elif u < args.p_own + args.p_other:
                other = topics[1 - label][rng.randrange(args.subtopics)]
                tokens.append(rng.choices(other, tw)[0])
            else:
                tokens.append(rng.choices(background, bw)[0])
        lines.append(json.dumps({"label": label, "text": " ".join(tokens)}))
    rng.shuffle(lines)
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
