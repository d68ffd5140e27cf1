//! ULV factorization of an HSS matrix with orthonormal nested bases.
//!
//! Each vertex holds a square block `D` with coupling bases `U`, `V`. A
//! unitary `Q` with `Q^* U = [0; U~]` exposes `s - p` rows free of outside
//! coupling; an LQ factorization `(Q^* D)_top = [L 0] P^*` then eliminates
//! `s - p` unknowns locally. The remaining `p` rows and unknowns merge with
//! the sibling's into the parent block, and the root is solved densely.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::dense::{blkdiag, qr, solve_lower_in_place, Mat, C64, ZERO};
use crate::error::{Error, Result};
use crate::hierarchy::ClusterTree;
use crate::hss::HssMatrix;

/// Relative pivot threshold for declaring a reduced block singular.
pub const SINGULAR_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
struct UlvNode {
    /// Row transform `Q` (`s x s`); identity when nothing is eliminated.
    q: Mat,
    /// Column transform `P` (`s x s`).
    p: Mat,
    /// Number of eliminated unknowns.
    e: usize,
    /// `e x e` lower triangular.
    l: Mat,
    /// `(s - e) x e`.
    d21: Mat,
    /// `e x q`: top rows of `P^* V`.
    v1: Mat,
    /// `U~ B_v` for the sibling coupling (`(s - e) x q_sibling`).
    ub: Mat,
    /// Parent transfer `W_v` (parents only).
    w: Mat,
    /// Size of the reduced block passed to the parent.
    reduced: usize,
}

#[derive(Debug, Clone)]
pub struct UlvFactorization {
    tree: ClusterTree,
    nodes: Vec<UlvNode>,
    root: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    root_size: usize,
}

/// Reduced data handed from a vertex to its parent.
struct Reduced {
    d22: Mat,
    ut: Mat,
    v2: Mat,
}

fn reduce(vertex: usize, d: Mat, u: Mat, v: Mat, tol: f64) -> Result<(UlvNode, Reduced)> {
    let s = d.nrows();
    let pu = u.ncols();
    if pu >= s {
        let node = UlvNode {
            q: Mat::identity(s, s),
            p: Mat::identity(s, s),
            e: 0,
            l: Mat::zeros(0, 0),
            d21: Mat::zeros(s, 0),
            v1: Mat::zeros(0, v.ncols()),
            ub: Mat::zeros(0, 0),
            w: Mat::zeros(0, 0),
            reduced: s,
        };
        return Ok((node, Reduced { d22: d, ut: u, v2: v }));
    }
    let e = s - pu;
    let qf = qr(&u).q_full();
    let mut q = Mat::zeros(s, s);
    q.columns_mut(0, e).copy_from(&qf.columns(pu, e));
    q.columns_mut(e, pu).copy_from(&qf.columns(0, pu));
    let ut = q.columns(e, pu).adjoint() * &u;
    let dh = q.adjoint() * &d;
    let top_adj = dh.rows(0, e).adjoint();
    let lq = qr(&top_adj);
    let r = lq.r.rows(0, e).columns(0, e).into_owned();
    let pivot = (0..e).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if !(pivot > tol) {
        return Err(Error::SingularBlock { vertex });
    }
    let p = lq.q_full();
    let dp = dh * &p;
    let vp = p.adjoint() * &v;
    let node = UlvNode {
        q,
        p,
        e,
        l: r.adjoint(),
        d21: dp.view((e, 0), (pu, e)).into_owned(),
        v1: vp.rows(0, e).into_owned(),
        ub: Mat::zeros(0, 0),
        w: Mat::zeros(0, 0),
        reduced: pu,
    };
    let red = Reduced {
        d22: dp.view((e, e), (pu, pu)).into_owned(),
        ut,
        v2: vp.rows(e, pu).into_owned(),
    };
    Ok((node, red))
}

/// Factors `h` after orthogonalizing its bases. Fails with
/// `SingularBlock { vertex }` when an eliminated block has a pivot below
/// `1e-14` times the norm estimate of `h`.
pub fn ulv_factor(h: &HssMatrix) -> Result<UlvFactorization> {
    let h = if h.interpolative { h.orthogonalize() } else { h.clone() };
    let tree = h.tree.clone();
    let tol = SINGULAR_TOL * h.norm_estimate();
    let nv = tree.num_vertices();
    let mut nodes: Vec<Option<UlvNode>> = vec![None; nv];
    let mut reduced: Vec<Option<Reduced>> = (0..nv).map(|_| None).collect();

    for level in (1..=tree.depth()).rev() {
        let inputs: Vec<(usize, Mat, Mat, Mat)> = tree
            .level_vertices(level)
            .map(|v| {
                let node = &h.vertices[v];
                if tree.is_leaf(v) {
                    (v, h.diag[h.leaf_index(v)].clone(), node.u.clone(), node.v.clone())
                } else {
                    let (c1, c2) = tree.children(v).unwrap();
                    let (d, u, w) = merge(&h, &tree, &nodes, &reduced, v, c1, c2);
                    (v, d, u, w)
                }
            })
            .collect();
        let out: Vec<Result<(usize, UlvNode, Reduced)>> = inputs
            .into_par_iter()
            .map(|(v, d, u, w)| {
                let (node, red) = reduce(v, d, u, w, tol)?;
                Ok((v, node, red))
            })
            .collect();
        for o in out {
            let (v, mut node, red) = o?;
            node.ub = &red.ut * &h.vertices[v].b;
            if !tree.is_leaf(v) {
                node.w = h.vertices[v].v.clone();
            }
            nodes[v] = Some(node);
            reduced[v] = Some(red);
        }
    }
    let (c1, c2) = tree.children(0).unwrap();
    let (d, _, _) = merge(&h, &tree, &nodes, &reduced, 0, c1, c2);
    let root_size = d.nrows();
    let lu = d.lu();
    if root_size > 0 {
        let u = lu.u();
        let pivot = (0..root_size).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if !(pivot > tol) {
            return Err(Error::SingularBlock { vertex: 0 });
        }
    }
    let mut nodes: Vec<UlvNode> = nodes.into_iter().skip(1).map(|n| n.unwrap()).collect();
    nodes.insert(
        0,
        UlvNode {
            q: Mat::zeros(0, 0),
            p: Mat::zeros(0, 0),
            e: 0,
            l: Mat::zeros(0, 0),
            d21: Mat::zeros(0, 0),
            v1: Mat::zeros(0, 0),
            ub: Mat::zeros(0, 0),
            w: Mat::zeros(0, 0),
            reduced: root_size,
        },
    );
    Ok(UlvFactorization {
        tree,
        nodes,
        root: lu,
        root_size,
    })
}

/// Parent block from the children's reduced data:
/// `[[D22_1, U~_1 B_1 V2_2^*], [U~_2 B_2 V2_1^*, D22_2]]` with bases
/// `blkdiag(U~_1, U~_2) R_v` and `blkdiag(V2_1, V2_2) W_v`.
fn merge(
    h: &HssMatrix,
    tree: &ClusterTree,
    nodes: &[Option<UlvNode>],
    reduced: &[Option<Reduced>],
    v: usize,
    c1: usize,
    c2: usize,
) -> (Mat, Mat, Mat) {
    let (r1, r2) = (reduced[c1].as_ref().unwrap(), reduced[c2].as_ref().unwrap());
    let (n1, n2) = (nodes[c1].as_ref().unwrap(), nodes[c2].as_ref().unwrap());
    let (s1, s2) = (r1.d22.nrows(), r2.d22.nrows());
    let mut d = Mat::zeros(s1 + s2, s1 + s2);
    d.view_mut((0, 0), (s1, s1)).copy_from(&r1.d22);
    d.view_mut((s1, s1), (s2, s2)).copy_from(&r2.d22);
    d.view_mut((0, s1), (s1, s2)).copy_from(&(&n1.ub * r2.v2.adjoint()));
    d.view_mut((s1, 0), (s2, s1)).copy_from(&(&n2.ub * r1.v2.adjoint()));
    if v == 0 || tree.is_leaf(v) {
        return (d, Mat::zeros(s1 + s2, 0), Mat::zeros(s1 + s2, 0));
    }
    let node = &h.vertices[v];
    let u = blkdiag(&r1.ut, &r2.ut) * &node.u;
    let w = blkdiag(&r1.v2, &r2.v2) * &node.v;
    (d, u, w)
}

fn mul(a: &Mat, x: &[C64]) -> Vec<C64> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}

fn mul_adj(a: &Mat, x: &[C64]) -> Vec<C64> {
    (a.adjoint() * DVector::from_column_slice(x)).as_slice().to_vec()
}

impl UlvFactorization {
    pub fn n(&self) -> usize {
        self.tree.n()
    }

    /// Size of the dense system solved at the root.
    pub fn root_size(&self) -> usize {
        self.root_size
    }

    /// Solves `C~ x = b`.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: b.len() });
        }
        let tree = &self.tree;
        let nv = tree.num_vertices();
        let mut rhs: Vec<Vec<C64>> = vec![Vec::new(); nv];
        let mut z1: Vec<Vec<C64>> = vec![Vec::new(); nv];
        let mut rest: Vec<Vec<C64>> = vec![Vec::new(); nv];
        let mut known: Vec<Vec<C64>> = vec![Vec::new(); nv];
        for v in tree.leaves() {
            let r = tree.range(v);
            rhs[v] = b[r.start..r.start + r.len].to_vec();
        }
        for level in (1..=tree.depth()).rev() {
            for v in tree.level_vertices(level) {
                let node = &self.nodes[v];
                if !tree.is_leaf(v) {
                    let (c1, c2) = tree.children(v).unwrap();
                    let a = sub(&rest[c1], &mul(&self.nodes[c1].ub, &known[c2]));
                    let c = sub(&rest[c2], &mul(&self.nodes[c2].ub, &known[c1]));
                    rhs[v] = [a, c].concat();
                }
                let bh = mul_adj(&node.q, &rhs[v]);
                let mut top = Mat::from_column_slice(node.e, 1, &bh[..node.e]);
                solve_lower_in_place(&node.l, &mut top);
                let z = top.as_slice().to_vec();
                rest[v] = sub(&bh[node.e..], &mul(&node.d21, &z));
                let mut kn = mul_adj(&node.v1, &z);
                if !tree.is_leaf(v) {
                    let (c1, c2) = tree.children(v).unwrap();
                    let up = mul_adj(&node.w, &[known[c1].as_slice(), known[c2].as_slice()].concat());
                    if kn.is_empty() {
                        kn = up;
                    } else {
                        for (k, u) in kn.iter_mut().zip(up) {
                            *k += u;
                        }
                    }
                }
                known[v] = kn;
                z1[v] = z;
            }
        }
        let (c1, c2) = tree.children(0).unwrap();
        let root_rhs = [
            sub(&rest[c1], &mul(&self.nodes[c1].ub, &known[c2])),
            sub(&rest[c2], &mul(&self.nodes[c2].ub, &known[c1])),
        ]
        .concat();
        let sol = if self.root_size == 0 {
            Vec::new()
        } else {
            self.root
                .solve(&DVector::from_vec(root_rhs))
                .ok_or(Error::SingularBlock { vertex: 0 })?
                .as_slice()
                .to_vec()
        };
        let mut z2: Vec<Vec<C64>> = vec![Vec::new(); nv];
        let s1 = self.nodes[c1].reduced;
        z2[c1] = sol[..s1].to_vec();
        z2[c2] = sol[s1..].to_vec();
        let mut x = vec![ZERO; n];
        for level in 1..=tree.depth() {
            for v in tree.level_vertices(level) {
                let node = &self.nodes[v];
                let local = mul(&node.p, &[z1[v].as_slice(), z2[v].as_slice()].concat());
                if tree.is_leaf(v) {
                    let r = tree.range(v);
                    x[r.start..r.start + r.len].copy_from_slice(&local);
                } else {
                    let (c1, c2) = tree.children(v).unwrap();
                    let s1 = self.nodes[c1].reduced;
                    z2[c1] = local[..s1].to_vec();
                    z2[c2] = local[s1..].to_vec();
                }
            }
        }
        Ok(x)
    }

    /// Independent right-hand sides, solved in parallel.
    pub fn solve_many(&self, bs: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
        bs.par_iter().map(|b| self.solve(b)).collect()
    }
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    if b.is_empty() {
        return a.to_vec();
    }
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

pub fn ulv_solve(f: &UlvFactorization, b: &[C64]) -> Result<Vec<C64>> {
    f.solve(b)
}
