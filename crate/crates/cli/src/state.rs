//! State files: exactly one of `matrix`, `xstate`, `bell_diagonal`, `mixture`.

use std::path::Path;

use discordlab::conjectures::{make_mixture_state, MixtureParams};
use discordlab::qstate::{make_x_state, BellDiagonalParams, TwoQubitState, XStateParams};
use discordlab::C64;
use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

/// Anything wrong with the state a run was given. Maps to exit code 3.
#[derive(Debug)]
pub struct StateError(pub String);

impl std::fmt::Display for StateError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid state: {}", self.0)
    }
}

impl std::error::Error for StateError {}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xstate: Option<XStateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell_diagonal: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureParams>,
}

impl StateFile {
    pub fn from_state(rho: &TwoQubitState) -> Self {
        let m = rho.matrix();
        let rows = (0..4).map(|r| (0..4).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect();
        Self { matrix: Some(rows), ..Self::default() }
    }

    pub fn build(&self) -> Result<TwoQubitState, StateError> {
        let given = [
            self.matrix.is_some(),
            self.xstate.is_some(),
            self.bell_diagonal.is_some(),
            self.mixture.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(StateError(
                "expected exactly one of \"matrix\", \"xstate\", \"bell_diagonal\", \"mixture\"".into(),
            ));
        }
        let invalid = |e: discordlab::Error| StateError(e.to_string());
        if let Some(rows) = &self.matrix {
            if rows.len() != 4 {
                return Err(StateError(format!("matrix has {} rows, expected 4", rows.len())));
            }
            let mut m = Matrix4::<C64>::zeros();
            for (r, row) in rows.iter().enumerate() {
                if row.len() != 4 {
                    return Err(StateError(format!("matrix row {r} has {} entries, expected 4", row.len())));
                }
                for (c, [re, im]) in row.iter().enumerate() {
                    m[(r, c)] = C64::new(*re, *im);
                }
            }
            return TwoQubitState::new(m).map_err(invalid);
        }
        if let Some(p) = &self.xstate {
            return make_x_state(p).map_err(invalid);
        }
        if let Some([t1, t2, t3]) = self.bell_diagonal {
            return BellDiagonalParams::new(t1, t2, t3).and_then(|t| t.to_state()).map_err(invalid);
        }
        let p = self.mixture.as_ref().expect("exactly one source is present");
        make_mixture_state(p).map_err(invalid)
    }
}

/// `source` is either inline JSON (starting with `{`) or a path to a JSON file.
pub fn load_state(source: &str) -> Result<TwoQubitState, StateError> {
    let text = if source.trim_start().starts_with('{') {
        source.to_string()
    } else {
        std::fs::read_to_string(Path::new(source)).map_err(|e| StateError(format!("cannot read {source}: {e}")))?
    };
    let file: StateFile = serde_json::from_str(&text).map_err(|e| StateError(e.to_string()))?;
    file.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_diagonal_corner_is_phi_plus() {
        let rho = load_state(r#"{"bell_diagonal":[1,-1,1]}"#).unwrap();
        let m = rho.matrix();
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((m[(r, c)].re - 0.5).abs() < 1e-15);
        }
        assert!(m[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn needs_exactly_one_source() {
        assert!(load_state("{}").is_err());
        let both = r#"{"bell_diagonal":[0,0,0],"mixture":{"lambda":0.5,"alpha":0.1,"beta":0.2}}"#;
        assert!(load_state(both).is_err());
        assert!(load_state(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn non_hermitian_matrix_names_the_entry() {
        let text = r#"{"matrix":[[[0.25,0],[0.1,0],[0,0],[0,0]],
                                 [[0,0],[0.25,0],[0,0],[0,0]],
                                 [[0,0],[0,0],[0.25,0],[0,0]],
                                 [[0,0],[0,0],[0,0],[0.25,0]]]}"#;
        let err = load_state(text).unwrap_err().to_string();
        assert!(err.contains("(0, 1)"), "{err}");
    }

    #[test]
    fn export_round_trip_is_exact() {
        let rho = load_state(r#"{"xstate":{"a":0.4,"b":0.1,"c":0.2,"d":0.3,"u":0.1,"v":0.05,"mu":0.3,"nu":1.1}}"#)
            .unwrap();
        let text = serde_json::to_string(&StateFile::from_state(&rho)).unwrap();
        let back = load_state(&text).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
        assert_eq!(serde_json::to_string(&StateFile::from_state(&back)).unwrap(), text);
    }
}
