#!/usr/bin/env python3
"""Fine-tune a sequence-classification transformer on pseudo-labels.

train:   reads JSONL {"text": ..., "label": int}, writes a checkpoint dir
predict: reads JSONL {"text": ...}, writes one predicted index per line
"""

import argparse
import json
import os
import sys


def read_jsonl(path):
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train")
    train.add_argument("--model-id", required=True)
    train.add_argument("--train", required=True)
    train.add_argument("--num-classes", type=int, required=True)
    train.add_argument("--epochs", type=int, default=4)
    train.add_argument("--learning-rate", type=float, default=2e-5)
    train.add_argument("--seed", type=int, default=42)
    train.add_argument("--max-length", type=int, default=512)
    train.add_argument("--out", required=True)

    predict = sub.add_parser("predict")
    predict.add_argument("--checkpoint", required=True)
    predict.add_argument("--input", required=True)
    predict.add_argument("--output", required=True)
    predict.add_argument("--batch-size", type=int, default=32)

    args = parser.parse_args()

    cache = os.environ.get("LIME_MODEL_CACHE")
    if cache:
        os.environ.setdefault("HF_HOME", cache)

    try:
        import torch
        from transformers import (AutoModelForSequenceClassification,
                                  AutoTokenizer)
    except ImportError as exc:
        print(f"missing dependency: {exc}", file=sys.stderr)
        return 3

    if args.command == "train":
        torch.manual_seed(args.seed)
        tokenizer = AutoTokenizer.from_pretrained(args.model_id)
        model = AutoModelForSequenceClassification.from_pretrained(
            args.model_id, num_labels=args.num_classes)
        model.train()
        rows = read_jsonl(args.train)
        optimizer = torch.optim.AdamW(model.parameters(),
                                      lr=args.learning_rate)
        batch_size = 16
        for _ in range(args.epochs):
            for start in range(0, len(rows), batch_size):
                batch = rows[start:start + batch_size]
                encoded = tokenizer([r["text"] for r in batch], padding=True,
                                    truncation=True,
                                    max_length=args.max_length,
                                    return_tensors="pt")
                labels = torch.tensor([r["label"] for r in batch])
                loss = model(**encoded, labels=labels).loss
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
        model.save_pretrained(args.out)
        tokenizer.save_pretrained(args.out)
        return 0

    tokenizer = AutoTokenizer.from_pretrained(args.checkpoint)
    model = AutoModelForSequenceClassification.from_pretrained(args.checkpoint)
    model.eval()
    rows = read_jsonl(args.input)
    predictions = []
    with torch.no_grad():
        for start in range(0, len(rows), args.batch_size):
            batch = rows[start:start + args.batch_size]
            encoded = tokenizer([r["text"] for r in batch], padding=True,
                                truncation=True, return_tensors="pt")
            logits = model(**encoded).logits
            predictions.extend(logits.argmax(dim=-1).tolist())
    with open(args.output, "w", encoding="utf-8") as handle:
        for p in predictions:
            handle.write(f"{p}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
