use super::{Contender, Evaluator, Winner};
use crate::backend::BackendError;
use crate::model::Intent;
use crate::par::par_map;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TournamentOutcome {
    /// Index into the pool.
    pub winner: usize,
    /// Pairwise comparisons made; always `pool.len() - 1`.
    pub comparisons: u64,
    /// Bracket depth; `ceil(log2(pool.len()))`.
    pub rounds: u32,
    /// Backend requests, counting evaluator-internal retries.
    pub queries: u64,
}

/// Single-elimination bracket.
///
/// Non-incumbent entries are shuffled with a [`SplitMix64`] stream seeded by
/// `seed` (Fisher-Yates from the back); the incumbent, when given, takes the
/// last slot. Each round pairs neighbours `(0,1), (2,3), …` with the earlier
/// entry presented first; an odd entry out gets a bye. Comparisons within a
/// round run concurrently up to `max_parallel`.
pub fn tournament(
    evaluator: &dyn Evaluator,
    pool: &[Contender<'_>],
    intent: &Intent,
    seed: u64,
    incumbent: Option<usize>,
    max_parallel: usize,
) -> Result<TournamentOutcome, BackendError> {
    if pool.is_empty() {
        return Err(BackendError::Precondition("tournament pool is empty".into()));
    }
    let mut order: Vec<usize> = (0..pool.len()).filter(|&i| Some(i) != incumbent).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    if let Some(i) = incumbent.filter(|&i| i < pool.len()) {
        order.push(i);
    }

    let mut comparisons = 0u64;
    let mut queries = 0u64;
    let mut rounds = 0u32;
    while order.len() > 1 {
        rounds += 1;
        let pairs = order.len() / 2;
        let results = par_map(pairs, max_parallel, |k| {
            let (a, b) = (order[2 * k], order[2 * k + 1]);
            evaluator.compare(pool[a], pool[b], intent)
        });
        let mut next = Vec::with_capacity(pairs + 1);
        for (k, r) in results.into_iter().enumerate() {
            let choice = r?;
            comparisons += 1;
            queries += choice.queries_used as u64;
            next.push(match choice.winner {
                Winner::First => order[2 * k],
                Winner::Second => order[2 * k + 1],
            });
        }
        if order.len() % 2 == 1 {
            next.push(order[order.len() - 1]);
        }
        order = next;
    }
    Ok(TournamentOutcome {
        winner: order[0],
        comparisons,
        rounds,
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::Choice;
    use crate::model::{DomainTag, Program, VisualState};
    use crate::raster::Raster;

    /// Compares by a score table keyed on the state's seed; lower wins.
    struct ByScore(Vec<f64>);

    impl Evaluator for ByScore {
        fn compare(&self, a: Contender<'_>, b: Contender<'_>, _: &Intent) -> Result<Choice, BackendError> {
            let (sa, sb) = (self.0[a.state.seed as usize], self.0[b.state.seed as usize]);
            Ok(Choice {
                winner: if sb < sa { Winner::Second } else { Winner::First },
                rationale: None,
                queries_used: 1,
            })
        }
    }

    fn pool(n: usize) -> (Vec<Program>, Vec<VisualState>) {
        let programs = (0..n)
            .map(|i| Program::initial(DomainTag::ToyTexture, format!("output {i}")).unwrap())
            .collect();
        let states = (0..n)
            .map(|i| VisualState {
                image: Raster::filled(1, 1, [0; 3]).unwrap(),
                seed: i as u64,
                program_ids: vec![],
            })
            .collect();
        (programs, states)
    }

    fn contenders<'a>(p: &'a [Program], s: &'a [VisualState]) -> Vec<Contender<'a>> {
        p.iter().zip(s).map(|(program, state)| Contender { program, state }).collect()
    }

    #[test]
    fn single_entry() {
        let (p, s) = pool(1);
        let i = Intent::new("x").unwrap();
        let out = tournament(&ByScore(vec![0.3]), &contenders(&p, &s), &i, 1, None, 1).unwrap();
        assert_eq!((out.winner, out.comparisons, out.rounds), (0, 0, 0));
    }

    #[test]
    fn three_entries() {
        let (p, s) = pool(3);
        let i = Intent::new("x").unwrap();
        let e = ByScore(vec![0.5, 0.2, 0.9]);
        for seed in 0..20 {
            let out = tournament(&e, &contenders(&p, &s), &i, seed, None, 1).unwrap();
            assert_eq!(out.winner, 1);
            assert_eq!(out.comparisons, 2);
        }
    }

    #[test]
    fn nine_with_incumbent() {
        let (p, s) = pool(9);
        let i = Intent::new("x").unwrap();
        let scores: Vec<f64> = (0..9).map(|k| ((k * 5) % 9) as f64).collect();
        let out = tournament(&ByScore(scores), &contenders(&p, &s), &i, 4, Some(8), 3).unwrap();
        assert_eq!(out.comparisons, 8);
        assert_eq!(out.rounds, 4);
        assert_eq!(out.winner, 0);
    }

    #[test]
    fn empty_pool_is_error() {
        let i = Intent::new("x").unwrap();
        assert!(tournament(&ByScore(vec![]), &[], &i, 0, None, 1).is_err());
    }

    #[test]
    fn parallel_and_serial_agree() {
        let (p, s) = pool(13);
        let i = Intent::new("x").unwrap();
        let e = ByScore((0..13).map(|k| ((k * 7) % 13) as f64).collect());
        let c = contenders(&p, &s);
        for seed in 0..10 {
            assert_eq!(
                tournament(&e, &c, &i, seed, Some(3), 1).unwrap(),
                tournament(&e, &c, &i, seed, Some(3), 8).unwrap()
            );
        }
    }
}
