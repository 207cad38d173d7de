use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// User-to-subcarrier allocation: `allocation[f][u] = 1` iff user `u`
/// transmits on subcarrier `f`. Rows sum to the function-node degree `U`,
/// columns to the variable-node degree `d_VN`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct ScmaGraph {
    allocation: Vec<Vec<u8>>,
    fn_degree: usize,
    vn_degree: usize,
    users_on: Vec<Vec<usize>>,
    subcarriers_of: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    allocation: Vec<Vec<u8>>,
}

impl TryFrom<GraphFile> for ScmaGraph {
    type Error = crate::Error;
    fn try_from(g: GraphFile) -> Result<Self> {
        ScmaGraph::new(g.allocation)
    }
}

impl From<ScmaGraph> for GraphFile {
    fn from(g: ScmaGraph) -> Self {
        GraphFile { allocation: g.allocation }
    }
}

impl ScmaGraph {
    pub fn new(allocation: Vec<Vec<u8>>) -> Result<Self> {
        let m = allocation.len();
        if m == 0 {
            return Err(invalid("allocation has no subcarriers"));
        }
        let nu = allocation[0].len();
        if nu == 0 || allocation.iter().any(|r| r.len() != nu) {
            return Err(invalid("allocation rows must be non-empty and of equal length"));
        }
        if allocation.iter().flatten().any(|&b| b > 1) {
            return Err(invalid("allocation entries must be 0 or 1"));
        }
        let users_on: Vec<Vec<usize>> =
            allocation.iter().map(|row| (0..nu).filter(|&u| row[u] == 1).collect()).collect();
        let subcarriers_of: Vec<Vec<usize>> =
            (0..nu).map(|u| (0..m).filter(|&f| allocation[f][u] == 1).collect()).collect();
        let fn_degree = users_on[0].len();
        if users_on.iter().any(|r| r.len() != fn_degree) {
            return Err(invalid("every subcarrier must carry the same number of users"));
        }
        let vn_degree = subcarriers_of[0].len();
        if subcarriers_of.iter().any(|c| c.len() != vn_degree) {
            return Err(invalid("every user must occupy the same number of subcarriers"));
        }
        if fn_degree == 0 || vn_degree == 0 {
            return Err(invalid("graph has isolated nodes"));
        }
        Ok(Self { allocation, fn_degree, vn_degree, users_on, subcarriers_of })
    }

    /// The 4-subcarrier, 6-user graph with degrees (3, 2).
    pub fn bundled_default() -> Self {
        // user -> subcarriers (0-based)
        let edges = [(0, [1, 3]), (1, [0, 2]), (2, [0, 1]), (3, [2, 3]), (4, [0, 3]), (5, [1, 2])];
        let mut alloc = vec![vec![0u8; 6]; 4];
        for (u, fs) in edges {
            for f in fs {
                alloc[f][u] = 1;
            }
        }
        Self::new(alloc).expect("bundled graph is regular")
    }

    /// `m` users on `m` subcarriers, user `j` on subcarriers `j..j+degree (mod m)`.
    pub fn circulant(m: usize, degree: usize) -> Result<Self> {
        if degree == 0 || degree > m {
            return Err(invalid(format!("degree {degree} invalid for {m} subcarriers")));
        }
        let mut alloc = vec![vec![0u8; m]; m];
        for u in 0..m {
            for d in 0..degree {
                alloc[(u + d) % m][u] = 1;
            }
        }
        Self::new(alloc)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn allocation(&self) -> &[Vec<u8>] {
        &self.allocation
    }

    pub fn subcarriers(&self) -> usize {
        self.allocation.len()
    }

    pub fn users(&self) -> usize {
        self.subcarriers_of.len()
    }

    /// U: users per subcarrier.
    pub fn fn_degree(&self) -> usize {
        self.fn_degree
    }

    /// d_VN: subcarriers per user.
    pub fn vn_degree(&self) -> usize {
        self.vn_degree
    }

    pub fn users_on(&self, f: usize) -> &[usize] {
        &self.users_on[f]
    }

    pub fn subcarriers_of(&self, u: usize) -> &[usize] {
        &self.subcarriers_of[u]
    }

    pub fn has_edge(&self, f: usize, u: usize) -> bool {
        self.allocation[f][u] == 1
    }
}
