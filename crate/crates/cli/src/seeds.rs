/// Seed list as given on the command line (a newtype so clap keeps it whole).
#[derive(Debug, Clone, PartialEq)]
pub struct SeedList(pub Vec<u64>);

/// Parses `1..10` (inclusive), `1..=10`, `3,5,8` and mixtures like `1..3,7`.
pub fn parse_list(s: &str) -> Result<SeedList, String> {
    parse(s).map(SeedList)
}

pub fn parse(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty seed range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(num(part)?);
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(out)
}

fn num(s: &str) -> Result<u64, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a seed"))
}

/// Compact text form accepted by [`parse`].
pub fn format(seeds: &[u64]) -> String {
    let contiguous = seeds.len() > 2 && seeds.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous {
        format!("{}..{}", seeds[0], seeds[seeds.len() - 1])
    } else {
        seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse("1..=2,9").unwrap(), vec![1, 2, 9]);
        assert_eq!(parse("5").unwrap(), vec![5]);
        assert!(parse("4..1").is_err());
        assert!(parse("x").is_err());
        for s in [vec![1, 2, 3, 4], vec![2, 7], vec![3]] {
            assert_eq!(parse(&format(&s)).unwrap(), s);
        }
    }
}
