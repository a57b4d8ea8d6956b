//! Text rendering of plans, traces and run reports.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Duration;

use packpair_core::simulator::ExecutionTrace;
use packpair_core::*;

/// Six significant digits in plain decimal notation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0.00000".into() } else { format!("{x}") };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn deg(a: f64) -> String {
    format!("{:.2}", a.to_degrees())
}

fn point(v: &Vec3) -> String {
    format!("({:.2},{:.2},{:.2})", v.x, v.y, v.z)
}

pub fn describe_action(a: &Action) -> String {
    match a {
        Action::DetectScene => "detect-scene".into(),
        Action::Push { shoe, plan, expect } | Action::Topple { shoe, plan, expect } => {
            let mut s = format!(
                "{} shoe={shoe} kind={} expect={expect} direction=({:.4},{:.4}) start={} end={}",
                a.kind(),
                plan.kind.label(),
                plan.direction.x,
                plan.direction.y,
                point(&plan.start.position),
                point(&plan.end.position),
            );
            if let Some(sol) = plan.solution {
                let _ = write!(
                    s,
                    " theta={} alpha={} beta={} beta_max={}",
                    deg(sol.theta),
                    deg(sol.alpha),
                    deg(sol.beta),
                    deg(sol.beta_max)
                );
            }
            s
        }
        Action::Grasp { shoe, grasp } => {
            format!("grasp shoe={shoe} at={} yaw={}", point(&grasp.position), deg(grasp.yaw))
        }
        Action::PlaceDirect { shoe, target } => format!(
            "place-direct shoe={shoe} at={} roll={} yaw={}",
            point(&target.position),
            deg(target.roll),
            deg(target.yaw)
        ),
        Action::PlaceOnEdge { shoe, placement } => format!(
            "place-on-edge shoe={shoe} offset={:.2} edge={} yaw={} drop={:.2}",
            placement.offset,
            point(&placement.contact_point.position),
            deg(placement.contact_point.yaw),
            placement.drop_height
        ),
    }
}

pub fn render_plan(plan: &PackingPlan) -> String {
    let mut out = format!(
        "combination={} mode={} predicted_topples={} actions={}\n",
        plan.combination,
        plan.mode,
        plan.predicted_topple_count,
        plan.actions.len()
    );
    for (i, a) in plan.actions.iter().enumerate() {
        let _ = writeln!(out, "action={} {}", i + 1, describe_action(a));
    }
    out
}

pub fn render_config(r: &TargetConfigReport) -> String {
    format!(
        "states_ok={} pairing_ok={} box_alignment_ok={} mutual_opposition_ok={} overall={}",
        r.states_ok, r.pairing_ok, r.box_alignment_ok, r.mutual_opposition_ok, r.overall
    )
}

/// Outcome of one planned and executed scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub combination: PairCombination,
    pub predicted_topples: u32,
    pub executed_actions: usize,
    pub executed_topples: usize,
    pub replans: usize,
    pub final_report: TargetConfigReport,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn new(plan: &PackingPlan, trace: &ExecutionTrace, wall_time: Duration) -> Self {
        Self {
            combination: plan.combination,
            predicted_topples: plan.predicted_topple_count,
            executed_actions: trace.steps.len(),
            executed_topples: trace.executed_topples(),
            replans: trace.replans.len(),
            final_report: trace.final_report,
            wall_time,
        }
    }

    pub fn render(&self) -> String {
        format!(
            "report combination={} predicted_topples={} executed_actions={} executed_topples={} replans={}\n{}\n",
            self.combination,
            self.predicted_topples,
            self.executed_actions,
            self.executed_topples,
            self.replans,
            render_config(&self.final_report)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassTally {
    pub runs: usize,
    pub successes: usize,
    pub predicted_topples: u64,
}

/// Aggregate over a batch. Scenarios that could not be planned count as
/// failures and appear under `unplannable`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchReport {
    pub runs: usize,
    pub successes: usize,
    pub unplannable: usize,
    pub predicted_topples: u64,
    pub executed_topples: u64,
    pub topple_histogram: BTreeMap<u32, usize>,
    pub per_class: BTreeMap<PairCombination, ClassTally>,
    pub wall_time: Duration,
}

impl BatchReport {
    pub fn add(&mut self, r: &RunReport) {
        self.runs += 1;
        self.successes += r.final_report.overall as usize;
        self.predicted_topples += r.predicted_topples as u64;
        self.executed_topples += r.executed_topples as u64;
        *self.topple_histogram.entry(r.predicted_topples).or_default() += 1;
        let c = self.per_class.entry(r.combination).or_default();
        c.runs += 1;
        c.successes += r.final_report.overall as usize;
        c.predicted_topples += r.predicted_topples as u64;
        self.wall_time += r.wall_time;
    }

    pub fn add_unplannable(&mut self) {
        self.runs += 1;
        self.unplannable += 1;
    }

    pub fn success_fraction(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.successes as f64 / self.runs as f64
        }
    }

    pub fn mean_topples(&self) -> f64 {
        let planned = self.runs - self.unplannable;
        if planned == 0 {
            0.0
        } else {
            self.predicted_topples as f64 / planned as f64
        }
    }

    /// Deterministic text; wall time is left out.
    pub fn render(&self, mode: Mode, seed: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "batch mode={mode} seed={seed} runs={}", self.runs);
        let _ = writeln!(
            out,
            "success={}/{} fraction={} unplannable={}",
            self.successes,
            self.runs,
            sig6(self.success_fraction()),
            self.unplannable
        );
        let _ = writeln!(
            out,
            "topples predicted_total={} executed_total={} mean={}",
            self.predicted_topples,
            self.executed_topples,
            sig6(self.mean_topples())
        );
        let hist: Vec<String> = self.topple_histogram.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        let _ = writeln!(out, "topple_histogram {}", hist.join(" "));
        let _ = writeln!(out, "{:<22} {:>6} {:>8} {:>8}", "combination", "runs", "success", "topples");
        for (c, t) in &self.per_class {
            let _ = writeln!(out, "{:<22} {:>6} {:>8} {:>8}", c.label(), t.runs, t.successes, t.predicted_topples);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.038625), "0.0386250");
        assert_eq!(sig6(0.0625), "0.0625000");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(0.0), "0.00000");
        assert_eq!(sig6(-2.5), "-2.50000");
    }

    #[test]
    fn batch_counts_add_up() {
        let mut b = BatchReport::default();
        let ok = RunReport {
            combination: PairCombination::TopTop,
            predicted_topples: 1,
            executed_actions: 6,
            executed_topples: 1,
            replans: 0,
            final_report: TargetConfigReport::new(true, true, true, true),
            wall_time: Duration::ZERO,
        };
        b.add(&ok);
        b.add(&RunReport { final_report: TargetConfigReport::failed(), ..ok.clone() });
        b.add_unplannable();
        assert_eq!(b.runs, 3);
        assert_eq!(b.successes, 1);
        assert_eq!(b.per_class[&PairCombination::TopTop].runs, 2);
        assert_eq!(b.topple_histogram.values().sum::<usize>() + b.unplannable, b.runs);
        assert_eq!(b.mean_topples(), 1.0);
    }
}
