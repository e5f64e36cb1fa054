//! Writers for simulated data.

use std::io::Write;

use crate::error::Result;
use crate::simulate::SimulationOutput;

/// Header `t,y,I_true`, one row per time step.
pub fn write_simulation_csv<W: Write>(sim: &SimulationOutput, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "y", "I_true"])?;
    for (t, (y, i)) in sim.observations.iter().zip(&sim.true_prevalence).enumerate() {
        w.write_record([t.to_string(), y.to_string(), i.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Header `t,a0,...,a{N-1}`, one row of 0/1 agent states per time step.
pub fn write_hidden_states_csv<W: Write>(sim: &SimulationOutput, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n = sim.hidden_states.first().map_or(0, |s| s.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|a| format!("a{a}")));
    w.write_record(&header)?;
    for (t, state) in sim.hidden_states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(state.states().iter().map(|s| s.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
