//! Mini-language for rate sweeps: `LO:HI:logN` spaces N points
//! geometrically, `LO:HI:linN` arithmetically. Both endpoints are included
//! exactly; interior points carry ordinary floating-point rounding.

/// Expands a grid spec into its points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, scale] = parts[..] else {
        return Err(format!("grid {spec:?} is not LO:HI:logN or LO:HI:linN"));
    };
    let lo: f64 = lo
        .parse()
        .map_err(|_| format!("grid {spec:?}: bad lower endpoint {lo:?}"))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| format!("grid {spec:?}: bad upper endpoint {hi:?}"))?;
    let (log, count) = match (scale.strip_prefix("log"), scale.strip_prefix("lin")) {
        (Some(n), _) => (true, n),
        (_, Some(n)) => (false, n),
        _ => return Err(format!("grid {spec:?}: scale must be logN or linN, got {scale:?}")),
    };
    let count: usize = count
        .parse()
        .map_err(|_| format!("grid {spec:?}: bad point count {count:?}"))?;
    if count < 2 {
        return Err(format!("grid {spec:?}: need at least 2 points"));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(format!("grid {spec:?}: endpoints must be finite with LO < HI"));
    }
    if log && lo <= 0.0 {
        return Err(format!("grid {spec:?}: a log grid needs LO > 0"));
    }

    let last = count - 1;
    let mut points = Vec::with_capacity(count);
    points.push(lo);
    for i in 1..last {
        let t = i as f64 / last as f64;
        points.push(if log {
            lo * (hi / lo).powf(t)
        } else {
            lo + (hi - lo) * t
        });
    }
    points.push(hi);
    Ok(points)
}
