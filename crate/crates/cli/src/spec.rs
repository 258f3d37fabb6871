//! Parsing of the string forms accepted on the command line.

use std::path::Path;

use advsample::adversary::{uniform_stream, IidWeights};
use advsample::dimension::shattered_tree;
use advsample::{AdversaryKind, AdversarySpec, Element, Error, FamilySpec, Result, SetFamily};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_items(text: &str) -> Result<Vec<Element>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .map(Element)
                .map_err(|_| parse_err(format!("bad stream element {s:?}")))
        })
        .collect()
}

/// `0,3,1,2` or `@path` with comma or whitespace separated elements.
pub fn parse_stream(text: &str) -> Result<Vec<Element>> {
    match text.strip_prefix('@') {
        Some(path) => {
            let body = std::fs::read_to_string(Path::new(path))
                .map_err(|e| parse_err(format!("cannot read stream file {path}: {e}")))?;
            parse_items(&body)
        }
        None => parse_items(text),
    }
}

/// A stream given inline, or `n` uniform draws over the family's domain.
pub fn resolve_stream(
    family: &SetFamily,
    stream: Option<&str>,
    random: Option<usize>,
    seed: u64,
) -> Result<Vec<Element>> {
    match (stream, random) {
        (Some(text), None) => parse_stream(text),
        (None, Some(n)) => uniform_stream(family.domain_size(), n, seed),
        _ => Err(parse_err("give exactly one of --stream and --random-stream")),
    }
}

/// Adversary strings:
///
/// * `obl:0,1,2` or `obl:@file`
/// * `iid:uniform[,seed=S]` over the family's domain
/// * `iid:weights=1/2/3[,seed=S]`
/// * `bsearch`
/// * `tree`: a maximal shattered tree of the family, which must have
///   Littlestone dimension at least `n`
pub fn parse_adversary(text: &str, n: usize, family: Option<&SetFamily>, seed: u64) -> Result<AdversarySpec> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let need_family = || family.ok_or_else(|| parse_err(format!("adversary {text:?} needs --family")));
    let kind = match kind {
        "obl" => AdversaryKind::Oblivious {
            items: parse_stream(rest)?,
        },
        "iid" => {
            let mut weights = None;
            let mut iid_seed = seed;
            for field in rest.split(',').filter(|f| !f.is_empty()) {
                match field.split_once('=') {
                    None if field == "uniform" => {
                        weights = Some(IidWeights::Uniform {
                            domain: need_family()?.domain_size(),
                        })
                    }
                    Some(("weights", w)) => {
                        let w = w
                            .split('/')
                            .map(|x| x.parse::<f64>().map_err(|_| parse_err(format!("bad weight {x:?}"))))
                            .collect::<Result<Vec<f64>>>()?;
                        weights = Some(IidWeights::Explicit { weights: w });
                    }
                    Some(("seed", s)) => {
                        iid_seed = s.parse().map_err(|_| parse_err(format!("bad seed {s:?}")))?
                    }
                    _ => return Err(parse_err(format!("unknown iid field {field:?}"))),
                }
            }
            AdversaryKind::Iid {
                weights: weights.ok_or_else(|| parse_err("iid needs uniform or weights="))?,
                seed: iid_seed,
            }
        }
        "bsearch" => AdversaryKind::BinarySearch,
        "tree" => {
            let f = need_family()?;
            let tree = shattered_tree(f, n)?.ok_or_else(|| {
                parse_err(format!("family {} shatters no tree of depth {n}", f.label()))
            })?;
            AdversaryKind::Tree { tree }
        }
        other => return Err(parse_err(format!("unknown adversary kind {other:?}"))),
    };
    let spec = AdversarySpec::new(kind, n);
    spec.validate()?;
    Ok(spec)
}

pub fn parse_family(text: &str) -> Result<FamilySpec> {
    FamilySpec::parse(text)
}

/// `256,1024,4096`.
pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| parse_err(format!("bad list entry {s:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use advsample::build_family;

    #[test]
    fn adversary_strings() {
        let f = build_family(&FamilySpec::Powerset { m: 3 }, 0).unwrap();
        let a = parse_adversary("obl:0,2,1", 3, None, 1).unwrap();
        assert!(matches!(a.kind, AdversaryKind::Oblivious { ref items } if items.len() == 3));
        let a = parse_adversary("iid:uniform,seed=9", 5, Some(&f), 1).unwrap();
        assert!(matches!(a.kind, AdversaryKind::Iid { seed: 9, .. }));
        let a = parse_adversary("iid:weights=1/0/2", 5, None, 4).unwrap();
        assert!(matches!(a.kind, AdversaryKind::Iid { seed: 4, .. }));
        assert!(parse_adversary("bsearch", 10, None, 0).unwrap().is_binary_search());
        assert!(parse_adversary("tree", 3, Some(&f), 0).is_ok());
        assert!(parse_adversary("tree", 4, Some(&f), 0).is_err());
        assert!(parse_adversary("obl:0,1", 3, None, 0).is_err());
        assert!(parse_adversary("iid:uniform", 3, None, 0).is_err());
        assert!(parse_adversary("zigzag", 3, None, 0).is_err());
    }

    #[test]
    fn lists_and_streams() {
        assert_eq!(parse_list("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_stream("4 5,6").unwrap(), vec![Element(4), Element(5), Element(6)]);
        assert!(parse_stream("4,x").is_err());
    }
}
