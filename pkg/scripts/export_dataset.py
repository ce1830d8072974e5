#!/usr/bin/env python3
"""Export the prompt/program fine-tuning dataset as JSONL.

Every record pairs a grammar-generated natural-language request with the
pump program the rule-based pipeline produces for it, plus the target color
and planning residual in the metadata. Same seed, same bytes.
"""

import argparse

from chromactl.config import AppConfig, load_config
from chromactl.device import DeviceState
from chromactl.translate import generate_dataset, write_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="dataset.jsonl")
    parser.add_argument("--config", default=None, help="INI config file")
    args = parser.parse_args()

    config = load_config(args.config) if args.config else AppConfig()
    state = DeviceState.fresh(config.limits)
    records = generate_dataset(
        args.n,
        args.seed,
        config.mix,
        list(config.pump_models),
        config.limits,
        state,
        config.default_volume_ml,
    )
    write_dataset(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")


if __name__ == "__main__":
    main()
