"""Achievable key rate against M with and without a secrecy margin, and the known-gain benchmark."""
from _common import parser, sweep_pair

from skapca import SystemConfig


def main():
    args = parser(__doc__, trials=50).parse_args()
    Ms = [2 ** e for e in range(3, 14)]
    for delta in (0.0, 0.1):
        base = SystemConfig.default_setup(M=500, K=100, N_d=1000, w2_db=-6.0, delta=delta, seed=args.seed)
        sweep_pair(base, "M", Ms, args.trials, args.workers, args.out_dir, f"fig7a_delta{delta:g}",
                   ("rs_margin", "rs_known", "key_bits", "p_out"))


if __name__ == "__main__":
    main()
