use dpn_core::search::{
    checkpoint_path, enumerate_all_dpn, enumerate_odd_dpn, merge_reports, run_search, split_job, OmegaTarget, Parity,
    RunOptions, SearchJob,
};
use proptest::prelude::*;

fn job(k: usize, parity: Parity, bound: u64, even: bool) -> SearchJob {
    SearchJob {
        k: OmegaTarget::Exactly(k),
        parity,
        bound,
        even_exponents_only: even,
        partition: None,
        checkpoint_id: None,
    }
}

#[test]
fn four_way_split_merges_to_the_parent() {
    let parent = SearchJob::odd(4, 100_000_000);
    let whole = enumerate_odd_dpn(&parent).unwrap();
    let parts: Vec<_> = split_job(&parent, 4)
        .unwrap()
        .iter()
        .map(|j| enumerate_odd_dpn(j).unwrap())
        .collect();
    assert_eq!(parts.len(), 4);
    let merged = merge_reports(&parts).unwrap();
    assert_eq!(merged.hit_values(), vec![9_018_009]);
    assert_eq!(merged.candidates_examined, whole.candidates_examined);
    assert_eq!(merged.job, parent);
    assert!(merged.merged_parts.is_empty());
}

#[test]
fn eight_way_split_of_three_primes_is_empty() {
    let parent = SearchJob::odd(3, 1_000_000);
    let parts: Vec<_> = split_job(&parent, 8)
        .unwrap()
        .iter()
        .map(|j| enumerate_odd_dpn(j).unwrap())
        .collect();
    assert_eq!(parts.len(), 8);
    assert!(merge_reports(&parts).unwrap().hits.is_empty());
}

#[test]
fn merge_is_order_independent_and_regroups() {
    let parent = job(3, Parity::All, 3_000_000, false);
    let parts: Vec<_> = split_job(&parent, 3)
        .unwrap()
        .iter()
        .map(|j| enumerate_odd_dpn(j).unwrap())
        .collect();
    let abc = merge_reports(&parts).unwrap();
    let cba = merge_reports(&[parts[2].clone(), parts[1].clone(), parts[0].clone()]).unwrap();
    let partial = merge_reports(&parts[..2]).unwrap();
    assert!(!partial.merged_parts.is_empty());
    let regrouped = merge_reports(&[parts[2].clone(), partial]).unwrap();
    assert_eq!(abc, cba);
    assert_eq!(abc, regrouped);
    assert_eq!(abc.hit_values(), enumerate_odd_dpn(&parent).unwrap().hit_values());
    assert!(merge_reports(&[parts[0].clone(), parts[0].clone()]).is_err());
}

#[test]
fn nested_splits_cover_the_parent() {
    let parent = SearchJob::odd(4, 100_000_000);
    let halves = split_job(&parent, 2).unwrap();
    let mut reports = vec![enumerate_odd_dpn(&halves[0]).unwrap()];
    for quarter in split_job(&halves[1], 2).unwrap() {
        reports.push(enumerate_odd_dpn(&quarter).unwrap());
    }
    let merged = merge_reports(&reports).unwrap();
    assert_eq!(merged.hit_values(), vec![9_018_009]);
    assert_eq!(
        merged.candidates_examined,
        enumerate_odd_dpn(&parent).unwrap().candidates_examined
    );
}

#[test]
fn interrupted_run_resumes_to_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let job = SearchJob::odd(4, 100_000_000);
    let uninterrupted = enumerate_odd_dpn(&job).unwrap();
    let half = uninterrupted.units_total / 2;
    let opts = RunOptions {
        jobs: 1,
        checkpoint_dir: Some(dir.path().to_path_buf()),
        resume: false,
        stop_after_units: Some(half),
    };
    let first = run_search(&job, &opts).unwrap();
    assert!(!first.complete);
    assert_eq!(first.units_done, half);
    assert!(checkpoint_path(dir.path(), &job).exists());

    let resumed = run_search(
        &job,
        &RunOptions {
            resume: true,
            stop_after_units: None,
            ..opts
        },
    )
    .unwrap();
    assert!(resumed.complete);
    assert_eq!(resumed.hit_values(), vec![9_018_009]);
    assert_eq!(resumed.candidates_examined, uninterrupted.candidates_examined);
    assert_eq!(resumed.units_done, uninterrupted.units_total);
    assert!(resumed.lineage.iter().any(|l| l.starts_with("resumed at unit")));
}

#[test]
fn checkpoint_of_another_job_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = SearchJob::odd(4, 100_000_000);
    a.checkpoint_id = Some("shared".into());
    let mut b = SearchJob::odd(4, 200_000_000);
    b.checkpoint_id = Some("shared".into());
    let opts = |resume| RunOptions {
        jobs: 1,
        checkpoint_dir: Some(dir.path().to_path_buf()),
        resume,
        stop_after_units: None,
    };
    run_search(&a, &opts(false)).unwrap();
    let resumed = run_search(&b, &opts(true)).unwrap_err().to_string();
    assert!(resumed.contains("belongs to job"), "{resumed}");
    assert!(run_search(&b, &opts(false)).is_err());
}

#[test]
fn parallel_run_matches_serial() {
    let job = job(3, Parity::Odd, 5_000_000, false);
    let mut serial = run_search(
        &job,
        &RunOptions {
            jobs: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let mut parallel = run_search(
        &job,
        &RunOptions {
            jobs: 4,
            ..Default::default()
        },
    )
    .unwrap();
    serial.elapsed_ms = 0;
    parallel.elapsed_ms = 0;
    assert_eq!(serial, parallel);
}

#[test]
fn structured_search_agrees_with_full_scan() {
    let bound = 2_000_000;
    let all = enumerate_all_dpn(bound).unwrap();
    for parity in [Parity::Odd, Parity::All] {
        for k in 1..=4 {
            let got = enumerate_odd_dpn(&job(k, parity, bound, false)).unwrap().hit_values();
            let want: Vec<u64> = all
                .hits
                .iter()
                .filter(|h| h.factorization.omega() == k && (parity == Parity::All || h.n % 2 == 1))
                .map(|h| h.n)
                .collect();
            assert_eq!(got, want, "k={k} {parity:?}");
        }
    }
}

#[test]
fn odd_hits_have_even_exponents_without_the_filter() {
    for k in 1..=5 {
        let r = enumerate_odd_dpn(&job(k, Parity::Odd, 10_000_000, false)).unwrap();
        for h in &r.hits {
            assert!(h.factorization.exponents().all(|a| a % 2 == 0), "{}", h.n);
        }
    }
}

#[test]
fn any_omega_covers_every_odd_hit() {
    let bound = 1_000_000;
    let job = SearchJob {
        k: OmegaTarget::Any,
        ..job(1, Parity::Odd, bound, false)
    };
    let got = enumerate_odd_dpn(&job).unwrap().hit_values();
    let want: Vec<u64> = enumerate_all_dpn(bound)
        .unwrap()
        .hit_values()
        .into_iter()
        .filter(|&n| n % 2 == 1 && n > 1)
        .collect();
    assert_eq!(got, want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn workload_grows_with_the_bound(k in 1usize..5, lo in 3u64..500_000, extra in 0u64..500_000, even in any::<bool>()) {
        let small = enumerate_odd_dpn(&job(k, Parity::Odd, lo, even)).unwrap();
        let large = enumerate_odd_dpn(&job(k, Parity::Odd, lo + extra, even)).unwrap();
        prop_assert!(small.candidates_examined <= large.candidates_examined);
        prop_assert!(small.hit_values().iter().all(|n| large.hit_values().contains(n)));
    }
}
