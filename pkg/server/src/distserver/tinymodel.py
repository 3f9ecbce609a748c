"""Build a tiny byte-level causal LM for tests and local experiments.

The model is a randomly initialized (seeded) two-layer transformer over a
byte-level vocabulary, saved in standard format so the server loads it
like any locally stored model. Useful wherever a real model is too heavy
but genuine transformer inference is wanted.
"""

from __future__ import annotations

import argparse

import torch
from tokenizers import Tokenizer
from tokenizers.decoders import ByteLevel as ByteLevelDecoder
from tokenizers.models import BPE
from tokenizers.pre_tokenizers import ByteLevel
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

END_TOKEN = "<|end|>"


def build_tiny_model(out_dir: str, seed: int = 0, context: int = 512) -> str:
    alphabet = sorted(ByteLevel.alphabet())
    vocab = {ch: i for i, ch in enumerate(alphabet)}
    vocab[END_TOKEN] = len(vocab)
    tokenizer = Tokenizer(BPE(vocab=vocab, merges=[]))
    tokenizer.pre_tokenizer = ByteLevel(add_prefix_space=False, use_regex=False)
    tokenizer.decoder = ByteLevelDecoder()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer, eos_token=END_TOKEN, model_max_length=context
    )

    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=context,
        n_embd=64,
        n_layer=2,
        n_head=2,
        eos_token_id=vocab[END_TOKEN],
        bos_token_id=vocab[END_TOKEN],
    )
    model = GPT2LMHeadModel(config)
    model = model.to(torch.float32)
    model.save_pretrained(out_dir)
    fast.save_pretrained(out_dir)
    return out_dir


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--context", type=int, default=512)
    args = parser.parse_args()
    build_tiny_model(args.out, seed=args.seed, context=args.context)
    print(f"wrote tiny model to {args.out}")


if __name__ == "__main__":
    main()
