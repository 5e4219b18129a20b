"""Walk the whole data path on a synthetic cohort.

Nine raw tables -> linked cohort -> master dataset -> exclusions ->
cleaning -> train/test split -> imputation, printing row counts at each
stage so you can see where records go and why.
"""

from edbench.clean_split import (apply_cleaning, apply_exclusions,
                                 apply_imputer, fit_imputer,
                                 load_cleaning_config, split_records)
from edbench.cohort import build_master
from edbench.ingest import link_tables
from edbench.synthdata import SynthConfig, generate_with_truth


def main():
    cfg = SynthConfig(n_patients=400, mean_visits=2.0, seed=7)
    gen = generate_with_truth(cfg)
    t = gen.tables
    print(f"generated tables: {len(t.edstays)} ED stays, "
          f"{len(t.patients)} patients, {len(t.admissions)} admissions, "
          f"{len(t.icustays)} ICU stays, {len(t.diagnoses_icd)} diagnoses")

    cohort = link_tables(t)
    records = build_master(cohort)
    print(f"master dataset: {len(records)} rows x {len(records[0])} columns")

    prev = {k: sum(bool(r[f'outcome_{k}']) for r in records) / len(records)
            for k in ("hospitalization", "critical", "ed_reattendance_72h")}
    print("outcome prevalence:",
          ", ".join(f"{k}={v:.4f}" for k, v in prev.items()))

    kept, excluded = apply_exclusions(records)
    reasons = {}
    for _, why in excluded:
        reasons[why] = reasons.get(why, 0) + 1
    print(f"exclusions: {len(excluded)} rows removed {reasons}")

    stats = apply_cleaning(kept, load_cleaning_config())
    touched = {c: s for c, s in stats.items()
               if s["dropped"] or s["clamped"]}
    print(f"cleaning touched {len(touched)} variables, e.g.",
          dict(list(touched.items())[:3]))

    train, test, assignment = split_records(kept, test_fraction=0.2, seed=0)
    print(f"split: {len(train)} train / {len(test)} test "
          f"({len(test) / len(kept):.3f} test fraction)")

    imputer = fit_imputer(train)
    n_filled = apply_imputer(train, imputer) + apply_imputer(test, imputer)
    print(f"imputation filled {n_filled} cells from train-only statistics")
    print("imputer medians (first 3):",
          dict(list(imputer.fill_values.items())[:3]))


if __name__ == "__main__":
    main()
