"""Synthetic desk corpus: images, manifest, OCR sidecar and VQA fixture answers.

Hateful and non-hateful memes share one pool of meme texts; only the image
content (as reported by the fixture VQA answers) separates the classes, so a
classifier can only succeed through the generated captions.

    python -m procap.synthetic OUT_DIR [--train 64] [--test 32] [--seed 0]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import cv2
import numpy as np

from .dataset import HATEFUL, NON_HATEFUL, MemeRecord, write_dataset
from .preprocess import save_image

TEXTS = [
    "when you finally get the weekend off",
    "me explaining my plans to my friends",
    "look at this new neighbour",
    "nobody asked but here it is",
    "my face when the bill arrives",
    "they said it could not be done",
    "this is what happens on monday",
    "just another day at the office",
]

HATEFUL_SCENES = {
    "content": ["a pig wearing a turban", "a crowd burning a flag", "a caricature with a hooked nose"],
    "race": ["a man with dark skin", "an arab man"],
    "gender": ["a woman in a kitchen", "a man"],
    "religion": ["muslim", "jewish"],
    "nationality": ["mexico", "syria"],
    "disability": ["yes, a man in a wheelchair", "no"],
    "animal": ["a pig", "a monkey"],
}

BENIGN_SCENES = {
    "content": ["a dog playing in a park", "a birthday cake on a table", "a family at the beach"],
    "race": ["a white man", "an asian woman"],
    "gender": ["a woman smiling", "a man"],
    "religion": ["christian", "none"],
    "nationality": ["canada", "japan"],
    "disability": ["no", "no, there are none"],
    "animal": ["a dog", "a cat"],
}

FILLER = "with a bright sky and lots of colourful details around the scene"


def _lengthen(answer: str, penalty: int) -> str:
    words = FILLER.split()
    return answer if penalty <= 1 else f"{answer} {' '.join(words[:4 * (penalty - 1)])}"


def make_desk_corpus(out_dir, n_train: int = 64, n_test: int = 32, seed: int = 0,
                     penalties=(1, 2, 3)) -> dict[str, Path]:
    """Write the corpus and return the paths of its files."""
    out = Path(out_dir)
    rng = np.random.default_rng(seed)
    records, sidecar, answers = [], {}, {}
    font = cv2.FONT_HERSHEY_SIMPLEX
    for split, n in (("train", n_train), ("test", n_test)):
        for i in range(n):
            mid = f"{split}{i:03d}"
            label = HATEFUL if i % 2 else NON_HATEFUL
            text = TEXTS[int(rng.integers(len(TEXTS)))]
            scenes = HATEFUL_SCENES if label == HATEFUL else BENIGN_SCENES
            person = bool(rng.random() < 0.75)
            animal = bool(rng.random() < 0.5)
            row = {"val_person": "yes" if person else "no", "val_animal": "yes" if animal else "no"}
            for focus, options in scenes.items():
                pick = options[int(rng.integers(len(options)))]
                row[focus] = {format(float(p), "g"): _lengthen(pick, p) for p in penalties}
            answers[mid] = row

            image = np.zeros((96, 160, 3), np.uint8)
            image[:] = rng.integers(30, 120, size=3)
            caption = text.split()[0].upper()
            (tw, th), base = cv2.getTextSize(caption, font, 0.6, 2)
            org = (8, 8 + th)
            cv2.putText(image, caption, org, font, 0.6, (255, 255, 255), 2)
            rel = f"img/{mid}.png"
            save_image(image, out / rel)
            sidecar[mid] = [{"bbox": [org[0], org[1] - th, tw, th + base], "text": caption, "confidence": 0.99}]
            records.append(MemeRecord(mid, rel, text, label, split))
    paths = {
        "manifest": write_dataset(records, out / "manifest.jsonl"),
        "ocr": out / "ocr.json",
        "answers": out / "answers.json",
    }
    paths["ocr"].write_text(json.dumps(sidecar, indent=1), encoding="utf-8")
    paths["answers"].write_text(json.dumps(answers, indent=1), encoding="utf-8")
    return paths


def main(argv=None):
    parser = argparse.ArgumentParser(prog="python -m procap.synthetic", description=__doc__.splitlines()[0])
    parser.add_argument("out_dir")
    parser.add_argument("--train", type=int, default=64)
    parser.add_argument("--test", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    for name, path in make_desk_corpus(args.out_dir, args.train, args.test, args.seed).items():
        print(f"{name}\t{path}")


if __name__ == "__main__":
    main()
