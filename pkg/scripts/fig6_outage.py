"""Average secrecy outage probability at delta = 0.1 against M and N_d."""
from _common import parser, sweep_pair

from skapca import SystemConfig


def main():
    args = parser(__doc__, trials=200).parse_args()
    for K in (10, 100):
        base = SystemConfig.default_setup(M=500, K=K, N_d=1000, w2_db=-6.0, delta=0.1, seed=args.seed)
        metrics = ("p_out", "outage_freq")
        sweep_pair(base, "M", [50, 100, 200, 300, 500], args.trials, args.workers, args.out_dir,
                   f"fig6a_K{K}", metrics, plug_in="true")
        sweep_pair(base.replace(M=200), "N_d", [100, 300, 1000, 3000, 10000], args.trials, args.workers,
                   args.out_dir, f"fig6b_K{K}", metrics, plug_in="true")


if __name__ == "__main__":
    main()
