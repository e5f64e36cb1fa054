//! Contact structures: who counts as a neighbor of whom.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use crate::error::{ensure, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Adjacency {
    /// Explicit sorted neighbor lists.
    Lists(Vec<Vec<usize>>),
    /// Disjoint complete subgraphs. Neighbor lists are implicit: every other
    /// member of the agent's block. Keeps a 3711-agent fully mixed population
    /// at O(N) memory and lets infected-neighbor counts come from block totals.
    Cliques {
        block_of: Vec<usize>,
        members: Vec<Vec<usize>>,
    },
}

/// Undirected contact network without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    adjacency: Adjacency,
    degrees: Vec<usize>,
}

/// Iterator over the neighbors of one agent.
pub enum Neighbors<'a> {
    List(std::slice::Iter<'a, usize>),
    Clique {
        members: std::slice::Iter<'a, usize>,
        this: usize,
    },
}

impl Iterator for Neighbors<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match self {
            Neighbors::List(it) => it.next().copied(),
            Neighbors::Clique { members, this } => members.by_ref().copied().find(|&m| m != *this),
        }
    }
}

impl Network {
    /// Every agent is adjacent to every other agent.
    pub fn fully_connected(n_agents: usize) -> Result<Self> {
        ensure!(
            n_agents >= 2,
            "fully connected network needs at least 2 agents, got {n_agents}"
        );
        Self::cliques(vec![0; n_agents], vec![(0..n_agents).collect()])
    }

    /// One complete subgraph per distinct label; no edges between groups.
    pub fn block_network<L: Eq + std::hash::Hash + Clone>(labels: &[L]) -> Result<Self> {
        let mut index: HashMap<L, usize> = HashMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (n, label) in labels.iter().enumerate() {
            let next = members.len();
            let b = *index.entry(label.clone()).or_insert(next);
            if b == members.len() {
                members.push(Vec::new());
            }
            members[b].push(n);
            block_of.push(b);
        }
        for (b, m) in members.iter().enumerate() {
            ensure!(
                m.len() >= 2,
                "block {b} has {} agent(s); each block needs at least 2",
                m.len()
            );
        }
        Self::cliques(block_of, members)
    }

    fn cliques(block_of: Vec<usize>, members: Vec<Vec<usize>>) -> Result<Self> {
        let degrees = block_of.iter().map(|&b| members[b].len() - 1).collect();
        Ok(Self {
            adjacency: Adjacency::Cliques { block_of, members },
            degrees,
        })
    }

    /// Moore neighborhood on a `rows x cols` lattice, agents in row-major order.
    pub fn grid8_network(rows: usize, cols: usize, wrap: bool) -> Result<Self> {
        ensure!(rows >= 1 && cols >= 1, "grid must be non-empty");
        if wrap {
            ensure!(
                rows >= 3 && cols >= 3,
                "wrapped grid needs rows, cols >= 3, got {rows}x{cols}"
            );
        }
        let (r, c) = (rows as isize, cols as isize);
        let mut lists = vec![Vec::with_capacity(8); rows * cols];
        for i in 0..r {
            for j in 0..c {
                let mut nb = BTreeSet::new();
                for di in -1..=1 {
                    for dj in -1..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (mut ni, mut nj) = (i + di, j + dj);
                        if wrap {
                            ni = ni.rem_euclid(r);
                            nj = nj.rem_euclid(c);
                        } else if ni < 0 || nj < 0 || ni >= r || nj >= c {
                            continue;
                        }
                        nb.insert((ni * c + nj) as usize);
                    }
                }
                lists[(i * c + j) as usize] = nb.into_iter().collect();
            }
        }
        Ok(Self::from_lists(lists))
    }

    /// Builds a grid for `n_agents`, checking `rows * cols == n_agents`.
    pub fn grid8_for(n_agents: usize, rows: usize, cols: usize, wrap: bool) -> Result<Self> {
        ensure!(
            rows * cols == n_agents,
            "grid {rows}x{cols} does not hold {n_agents} agents"
        );
        Self::grid8_network(rows, cols, wrap)
    }

    /// Undirected edges; duplicates are merged, self-loops rejected.
    pub fn from_edges(n_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n_agents];
        for &(a, b) in edges {
            ensure!(
                a < n_agents && b < n_agents,
                "edge ({a}, {b}) out of range for {n_agents} agents"
            );
            ensure!(a != b, "self-loop on agent {a}");
            sets[a].insert(b);
            sets[b].insert(a);
        }
        Ok(Self::from_lists(
            sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        ))
    }

    /// Edge-list text: two whitespace-separated agent indices per line,
    /// `#` starts a comment.
    pub fn read_edge_list<R: BufRead>(reader: R, n_agents: usize, source: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let load_err = |message: String| Error::Load {
                path: source.to_string(),
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(load_err(format!("expected 2 columns, found {}", fields.len())));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| load_err(format!("bad agent index {s:?}: {e}")))
            };
            let (a, b) = (parse(fields[0])?, parse(fields[1])?);
            if a >= n_agents || b >= n_agents {
                return Err(load_err(format!("agent index out of range for {n_agents} agents")));
            }
            if a == b {
                return Err(load_err(format!("self-loop on agent {a}")));
            }
            edges.push((a, b));
        }
        Self::from_edges(n_agents, &edges)
    }

    fn from_lists(lists: Vec<Vec<usize>>) -> Self {
        let degrees = lists.iter().map(Vec::len).collect();
        Self {
            adjacency: Adjacency::Lists(lists),
            degrees,
        }
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.degrees[agent]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn neighbors(&self, agent: usize) -> Neighbors<'_> {
        match &self.adjacency {
            Adjacency::Lists(l) => Neighbors::List(l[agent].iter()),
            Adjacency::Cliques { block_of, members } => Neighbors::Clique {
                members: members[block_of[agent]].iter(),
                this: agent,
            },
        }
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        match &self.adjacency {
            Adjacency::Lists(l) => l[a].binary_search(&b).is_ok(),
            Adjacency::Cliques { block_of, .. } => block_of[a] == block_of[b],
        }
    }

    /// Block membership when the network is a union of complete subgraphs.
    pub fn blocks(&self) -> Option<&[Vec<usize>]> {
        match &self.adjacency {
            Adjacency::Cliques { members, .. } => Some(members),
            Adjacency::Lists(_) => None,
        }
    }

    /// Writes `sum_{m in N_n} x_m` for every agent into `out`.
    pub fn infected_neighbor_counts(&self, states: &[u8], out: &mut [u32]) {
        debug_assert_eq!(states.len(), self.len());
        debug_assert_eq!(out.len(), self.len());
        match &self.adjacency {
            Adjacency::Lists(lists) => {
                for (o, list) in out.iter_mut().zip(lists) {
                    *o = list.iter().map(|&m| states[m] as u32).sum();
                }
            }
            Adjacency::Cliques { block_of, members } => {
                let mut totals = [0u32; 8];
                let mut heap;
                let totals: &mut [u32] = if members.len() <= totals.len() {
                    &mut totals[..members.len()]
                } else {
                    heap = vec![0u32; members.len()];
                    &mut heap
                };
                for (&b, &x) in block_of.iter().zip(states) {
                    totals[b] += x as u32;
                }
                for ((o, &b), &x) in out.iter_mut().zip(block_of).zip(states) {
                    *o = totals[b] - x as u32;
                }
            }
        }
    }
}
