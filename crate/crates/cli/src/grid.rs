use std::str::FromStr;

/// A list of values written either as `v1,v2,...` or as `lo:hi:n`
/// (`n` equally spaced points, both ends included).
#[derive(Debug, Clone, PartialEq)]
pub struct Values(pub Vec<f64>);

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("expected a number, found {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, found {s:?}"))
    }
}

impl FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [lo, hi, n] => {
                let (lo, hi) = (number(lo)?, number(hi)?);
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| format!("expected a point count, found {n:?}"))?;
                if n == 0 {
                    return Err("a range needs at least one point".into());
                }
                if n == 1 {
                    return Ok(Values(vec![lo]));
                }
                let step = (hi - lo) / (n - 1) as f64;
                Ok(Values(
                    (0..n)
                        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
                        .collect(),
                ))
            }
            [list] => list
                .split(',')
                .map(number)
                .collect::<Result<_, _>>()
                .map(Values),
            _ => Err(format!("expected v1,v2,... or lo:hi:n, found {s:?}")),
        }
    }
}

/// `Z1LIST;Z2LIST`, the Cartesian product of two lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Product(pub Vec<[f64; 2]>);

impl FromStr for Product {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(';')
            .ok_or_else(|| format!("expected Z1LIST;Z2LIST, found {s:?}"))?;
        let (a, b): (Values, Values) = (a.parse()?, b.parse()?);
        Ok(Product(
            a.0.iter()
                .flat_map(|&u| b.0.iter().map(move |&v| [u, v]))
                .collect(),
        ))
    }
}
