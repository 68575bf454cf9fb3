"""NMSE of Eve's gain estimate against M and against N_d, for several K and w^2."""
from _common import parser, sweep_pair

from skapca import SystemConfig


def main():
    args = parser(__doc__, trials=1000).parse_args()
    for K in (10, 100):
        for w2_db in (-6.0, -3.0):
            tag = f"K{K}_w{abs(w2_db):g}"
            base = SystemConfig.default_setup(M=500, K=K, N_d=1000, w2_db=w2_db, seed=args.seed)
            sweep_pair(base, "M", [50, 100, 200, 500, 1000, 2000], args.trials, args.workers, args.out_dir,
                       f"fig2a_{tag}", ("nmse", "w_hat"))
            sweep_pair(base, "N_d", [100, 300, 1000, 3000, 10000], args.trials, args.workers, args.out_dir,
                       f"fig2b_{tag}", ("nmse", "w_hat"))


if __name__ == "__main__":
    main()
