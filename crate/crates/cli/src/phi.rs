use suq2_walk::{IrrepLabel, WeightFunctional};

const NORM_SLACK: f64 = 1e-12;

/// Parses `TWICE_SPIN:WEIGHT[,TWICE_SPIN:WEIGHT...]`; repeated labels are summed.
pub fn parse_phi(spec: &str) -> Result<WeightFunctional, String> {
    let mut pairs = Vec::new();
    for token in spec.split(',') {
        let token = token.trim();
        let (label, weight) = token
            .split_once(':')
            .ok_or_else(|| format!("malformed pair '{token}': expected TWICE_SPIN:WEIGHT"))?;
        let label: u32 = label
            .trim()
            .parse()
            .map_err(|_| format!("malformed twice-spin '{}' in pair '{token}'", label.trim()))?;
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|_| format!("malformed weight '{}' in pair '{token}'", weight.trim()))?;
        if !weight.is_finite() {
            return Err(format!("weight in pair '{token}' is not finite"));
        }
        if weight < 0.0 {
            return Err(format!("negative weight in pair '{token}'"));
        }
        pairs.push((IrrepLabel::from_twice_spin(label), weight));
    }
    let phi = WeightFunctional::new(pairs).map_err(|e| e.to_string())?;
    if phi.norm() > 1.0 + NORM_SLACK {
        return Err(format!("weights in '{spec}' sum to {}, above 1", phi.norm()));
    }
    Ok(phi)
}
