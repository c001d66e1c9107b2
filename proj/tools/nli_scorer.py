#!/usr/bin/env python3
"""Score (premise, hypothesis) pairs with a pretrained NLI model.

Reads JSONL records {"premise": ..., "hypothesis": ...} and writes one
entailment probability per line. Two readings of the 3-way NLI output are
supported:

  entail_vs_contradiction  exp(entail) / (exp(entail) + exp(contradiction)),
                           the neutral logit is discarded
  raw_entailment           entailment mass of the full 3-way softmax

LIME_MODEL_CACHE, when set, names a local checkpoint cache directory.
"""

import argparse
import json
import os
import sys


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model-id", required=True)
    parser.add_argument(
        "--mode",
        choices=["entail_vs_contradiction", "raw_entailment"],
        default="entail_vs_contradiction",
    )
    parser.add_argument("--max-premise-tokens", type=int, default=512)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--input", required=True)
    parser.add_argument("--output", required=True)
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

    torch.manual_seed(0)
    tokenizer = AutoTokenizer.from_pretrained(args.model_id)
    model = AutoModelForSequenceClassification.from_pretrained(args.model_id)
    model.eval()

    label2id = {k.lower(): v for k, v in model.config.label2id.items()}
    entail_idx = label2id.get("entailment", 2)
    contradict_idx = label2id.get("contradiction", 0)

    pairs = []
    with open(args.input, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rec = json.loads(line)
                pairs.append((rec["premise"], rec["hypothesis"]))

    probs = []
    with torch.no_grad():
        for start in range(0, len(pairs), args.batch_size):
            batch = pairs[start:start + args.batch_size]
            # Premises truncated from the tail; hypotheses kept whole.
            premises = [
                tokenizer.convert_tokens_to_string(
                    tokenizer.tokenize(p)[: args.max_premise_tokens])
                for p, _ in batch
            ]
            hypotheses = [h for _, h in batch]
            encoded = tokenizer(premises, hypotheses, padding=True,
                                truncation=True, return_tensors="pt")
            logits = model(**encoded).logits
            if args.mode == "entail_vs_contradiction":
                pair_logits = logits[:, [entail_idx, contradict_idx]]
                batch_probs = torch.softmax(pair_logits, dim=-1)[:, 0]
            else:
                batch_probs = torch.softmax(logits, dim=-1)[:, entail_idx]
            probs.extend(batch_probs.tolist())

    with open(args.output, "w", encoding="utf-8") as handle:
        for p in probs:
            handle.write(f"{p:.17g}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
