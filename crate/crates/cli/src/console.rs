use std::io::{BufRead, Write};

use gamesys_core::evolution::{Candidate, CandidateSelector, Selection};
use gamesys_core::sim::Metric;

/// Shows checkpoint candidates on one stream and reads the pick from
/// another: an index, `q` to stop with the best so far, or an empty line
/// for the fittest.
pub struct ConsoleSelector<R, W> {
    input: R,
    out: W,
}

impl<R: BufRead, W: Write> ConsoleSelector<R, W> {
    pub fn new(input: R, out: W) -> Self {
        ConsoleSelector { input, out }
    }

    fn show(&mut self, generation: usize, candidates: &[Candidate]) -> std::io::Result<()> {
        writeln!(self.out, "\n== generation {generation}: pick a candidate ==")?;
        for (i, c) in candidates.iter().enumerate() {
            let d = &c.digest;
            writeln!(
                self.out,
                "[{i}] fitness {:.3}  {} states, {} actions, {} transitions  path length {}",
                c.fitness,
                c.design.states.len(),
                c.design.actions.len(),
                c.design.transitions.len(),
                d.path_length
            )?;
            writeln!(self.out, "    path: {}", d.path_preview.join(" -> "))?;
            let top: Vec<String> = d.top_states.iter().map(|(s, n)| format!("{s} x{n}")).collect();
            writeln!(self.out, "    most visited: {}", top.join(", "))?;
            let means: Vec<String> =
                Metric::ALL.iter().map(|&m| format!("{}={:.2}", m.name(), d.mean_metrics.get(m))).collect();
            writeln!(self.out, "    means: {}", means.join(" "))?;
        }
        Ok(())
    }
}

impl<R: BufRead, W: Write> CandidateSelector for ConsoleSelector<R, W> {
    fn choose(&mut self, generation: usize, candidates: &[Candidate]) -> Selection {
        if self.show(generation, candidates).is_err() {
            return Selection::Abort;
        }
        loop {
            let _ = write!(self.out, "choice [0-{}, q to stop, enter for best]: ", candidates.len() - 1);
            let _ = self.out.flush();
            let mut line = String::new();
            match self.input.read_line(&mut line) {
                Ok(0) | Err(_) => return Selection::Abort,
                Ok(_) => {}
            }
            let line = line.trim();
            if line.is_empty() {
                return Selection::Chosen(0);
            }
            if line == "q" {
                return Selection::Abort;
            }
            match line.parse::<usize>() {
                Ok(i) if i < candidates.len() => return Selection::Chosen(i),
                _ => {
                    let _ = writeln!(self.out, "not a candidate index: {line}");
                }
            }
        }
    }
}
