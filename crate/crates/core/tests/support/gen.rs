//! Seeded template generator for synthetic corpora.
//!
//! Every contract is a handful of member groups drawn from a fixed template
//! set with randomized operators, constants and bounds. Loops are bounded by
//! small constants or argument lengths, so execution stays cheap.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Template = fn(usize, &mut ChaCha8Rng) -> String;

const TEMPLATES: &[Template] = &[
    licm_for, inversion, licm_while, cse, keccak, outline, ledger, signed, byte_scan, array_max, wrapping, grid,
    guarded_div, rotate, senders,
];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty")
}

fn licm_for(k: usize, r: &mut ChaCha8Rng) -> String {
    let op1 = pick(r, &["+", "^", "|", "&", "-"]);
    let op2 = pick(r, &["^", "|", "&", "+", "%"]);
    let c = r.random_range(1..1000u32);
    let n = r.random_range(2..12u32);
    format!(
        "    uint256 public acc{k};

    function licm{k}(uint256 y, uint256 z) public returns (uint256) {{
        uint256 x;
        uint256 t;
        x = y {op1} z;
        t = x {op2} {c};
        for (uint256 i = 0; i < {n}; i++) {{
            acc{k} += t % 1000003 + i;
        }}
        return acc{k};
    }}
"
    )
}

fn inversion(k: usize, r: &mut ChaCha8Rng) -> String {
    let n = r.random_range(2..16u32);
    let m = n + r.random_range(1..8u32);
    let c = r.random_range(1..500u32);
    format!(
        "    uint256[{n}] public arr{k};

    function inv{k}(uint256 s) public {{
        uint256 i = s % {m};
        if (i < {n}) {{
            do {{
                arr{k}[i] = i * {c} + s % 7;
                i++;
            }} while (i < {n});
        }}
    }}
"
    )
}

fn licm_while(k: usize, r: &mut ChaCha8Rng) -> String {
    let op = pick(r, &["+", "*", "|", "^"]);
    let c1 = r.random_range(1..300u32);
    let c2 = r.random_range(1..300u32);
    let n = r.random_range(1..10u32);
    format!(
        "    function sum{k}(uint8 a, uint16 b) public pure returns (uint256 r) {{
        uint256 p = uint256(a) {op} {c1};
        uint256 q = p * {c2} + uint256(b);
        uint256 j = 0;
        while (j < {n}) {{
            r += q ^ j;
            j++;
        }}
    }}
"
    )
}

fn cse(k: usize, r: &mut ChaCha8Rng) -> String {
    let op1 = pick(r, &["^", "|", "&"]);
    let op2 = pick(r, &["%", "^", "|"]);
    let c1 = r.random_range(1..5000u32);
    let c2 = r.random_range(0..5000u32);
    format!(
        "    uint256 public last{k};
    event Mixed{k}(uint256 u, uint256 t);

    function mix{k}(uint256 a, uint256 b) public returns (uint256) {{
        uint256 t = (a {op1} b) {op2} {c1};
        uint256 u = t / 2 + {c2};
        last{k} = t;
        emit Mixed{k}(u, t);
        return u ^ t;
    }}
"
    )
}

fn keccak(k: usize, r: &mut ChaCha8Rng) -> String {
    let c = r.random_range(0..100000u32);
    let enc = pick(r, &["encodePacked", "encode"]);
    format!(
        "    mapping(bytes32 => bool) public seen{k};
    event Hashed{k}(bytes32 indexed h, bytes32 g);

    function hash{k}(uint256 a, bytes32 b) public returns (bytes32) {{
        bytes32 h = keccak256(abi.{enc}(a, b, uint256({c})));
        seen{k}[h] = true;
        emit Hashed{k}(h, keccak256(abi.encode(a)));
        return h;
    }}
"
    )
}

fn outline(k: usize, r: &mut ChaCha8Rng) -> String {
    let c1 = r.random_range(1..u16::MAX as u32);
    let c2 = r.random_range(1..1000u32);
    let c3 = r.random_range(1..100000u32);
    format!(
        "    function calc{k}(uint256 a, uint256 b) public pure returns (uint256) {{
        return clamp{k}((a & {c1}) + (b % {c2}), {c3});
    }}

    function clamp{k}(uint256 v, uint256 hi) internal pure returns (uint256) {{
        return v > hi ? hi : v;
    }}
"
    )
}

fn ledger(k: usize, r: &mut ChaCha8Rng) -> String {
    let c = r.random_range(2..1_000_000u32);
    let cap = r.random_range(1_000_000..u32::MAX);
    format!(
        "    mapping(address => uint256) public bal{k};
    uint256 public total{k};

    function credit{k}(address who, uint128 v) public {{
        uint256 amt = uint256(v) % {c};
        bal{k}[who] += amt;
        total{k} = total{k} + amt;
        require(total{k} < {cap}, \"cap\");
    }}
"
    )
}

fn signed(k: usize, r: &mut ChaCha8Rng) -> String {
    let c1 = r.random_range(2..100i32);
    let c2 = r.random_range(0..1000i32);
    format!(
        "    function sgn{k}(int256 a, int64 b) public pure returns (int256) {{
        int256 c = a / {c1} + int256(b);
        if (c < 0) {{
            return -c + {c2};
        }}
        return c - {c2};
    }}
"
    )
}

fn byte_scan(k: usize, r: &mut ChaCha8Rng) -> String {
    let m = r.random_range(2..9u32);
    let cap = r.random_range(100..100000u32);
    format!(
        "    function bsum{k}(bytes memory d) public pure returns (uint256 s) {{
        for (uint256 i = 0; i < d.length; i++) {{
            if (uint8(d[i]) % {m} == 0) {{
                continue;
            }}
            s += uint256(uint8(d[i])) * (i + 1);
            if (s > {cap}) {{
                break;
            }}
        }}
    }}
"
    )
}

fn array_max(k: usize, r: &mut ChaCha8Rng) -> String {
    let c = r.random_range(2..1000u32);
    format!(
        "    uint256[] public hist{k};

    function amax{k}(uint256[] memory xs) public returns (uint256) {{
        uint256 m = 0;
        for (uint256 i = 0; i < xs.length; i++) {{
            if (xs[i] > m) {{
                m = xs[i];
            }}
        }}
        hist{k}.push(m % {c});
        return hist{k}.length;
    }}
"
    )
}

fn wrapping(k: usize, r: &mut ChaCha8Rng) -> String {
    let c1 = r.random_range(2..u16::MAX as u32);
    let c2 = r.random_range(0..u16::MAX as u32);
    let ty = pick(r, &["uint256", "uint64", "uint32"]);
    format!(
        "    function wrap{k}({ty} a) public pure returns ({ty}) {{
        unchecked {{
            return a * {c1} + {c2};
        }}
    }}
"
    )
}

fn grid(k: usize, r: &mut ChaCha8Rng) -> String {
    let n = r.random_range(2..8u32);
    format!(
        "    struct P{k} {{
        uint64 x;
        uint64 y;
    }}
    P{k}[] internal pts{k};

    function grid{k}(uint8 w) public returns (uint256 cnt) {{
        uint256 lim = uint256(w) % {n} + 1;
        for (uint256 i = 0; i < lim; i++) {{
            for (uint256 j = i; j < lim; j++) {{
                cnt += i * j + 1;
            }}
        }}
        pts{k}.push(P{k}(uint64(cnt), uint64(lim)));
    }}
"
    )
}

fn guarded_div(k: usize, r: &mut ChaCha8Rng) -> String {
    let c = r.random_range(1..1000u32);
    format!(
        "    modifier nz{k}(uint256 v) {{
        require(v != 0, \"zero\");
        _;
    }}

    function div{k}(uint256 a, uint256 b) public view nz{k}(b) returns (uint256) {{
        return a / b + block.number * {c};
    }}
"
    )
}

fn rotate(k: usize, r: &mut ChaCha8Rng) -> String {
    let s = r.random_range(0..200u32);
    let c = r.random_range(0..u32::MAX);
    format!(
        "    function bits{k}(bytes32 w, uint8 s) public pure returns (bytes32, uint256) {{
        bytes32 v = (w << s) | (w >> (256 - uint256(s)));
        uint256 n = uint256(v) >> {s};
        return (v ^ bytes32(uint256({c})), n & 0xff);
    }}
"
    )
}

fn senders(k: usize, r: &mut ChaCha8Rng) -> String {
    let c = r.random_range(1..50u32);
    format!(
        "    mapping(address => uint256) public seenBy{k};

    function touch{k}() public returns (uint256) {{
        require(msg.sender != address(0));
        seenBy{k}[msg.sender] += {c};
        return seenBy{k}[msg.sender];
    }}
"
    )
}

/// One contract named `Gen{index}`.
pub fn contract(index: usize, rng: &mut ChaCha8Rng) -> String {
    let count = rng.random_range(3..6usize);
    let mut picks: Vec<usize> = (0..TEMPLATES.len()).collect();
    let (chosen, _) = picks.partial_shuffle(rng, count);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    let mut out = String::from("// SPDX-License-Identifier: UNLICENSED\n");
    if rng.random_bool(0.5) {
        out.push_str("pragma solidity >=0.8.0;\n");
    }
    out.push_str(&format!("\ncontract Gen{index} {{\n"));
    if rng.random_bool(0.3) {
        out.push_str(&format!("    uint256 public seed = {};\n\n    constructor() {{\n        seed = block.number + {};\n    }}\n\n", rng.random_range(0..1000u32), rng.random_range(0..1000u32)));
    }
    let members: Vec<String> = chosen.iter().enumerate().map(|(k, &t)| TEMPLATES[t](k, rng)).collect();
    out.push_str(&members.join("\n"));
    out.push_str("}\n");
    out
}

/// Writes `n` contracts to `dir` as `gen_0000.sol` and so on.
pub fn write_corpus(dir: &Path, n: usize, seed: u64) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        std::fs::write(dir.join(format!("gen_{i:04}.sol")), contract(i, &mut rng))?;
    }
    Ok(())
}
