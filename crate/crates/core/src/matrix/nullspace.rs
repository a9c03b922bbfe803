use super::CMat;

/// Orthonormal basis of the common kernel of a family of linear maps.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// `n × k` matrix with orthonormal columns spanning the kernel.
    pub basis: CMat,
    /// Singular values of the stacked system, descending.
    pub singular_values: Vec<f64>,
    /// Largest singular value classified as zero relative to the largest overall.
    pub largest_null: f64,
    /// Smallest singular value classified as nonzero relative to the largest overall.
    pub smallest_kept: f64,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn vectors(&self) -> impl Iterator<Item = super::CVec> + '_ {
        self.basis.column_iter().map(|c| c.into_owned())
    }
}

/// Accumulates row blocks of a linear system in `n` unknowns, keeping only an
/// `n × n` triangular factor so memory stays bounded however many blocks are pushed.
#[derive(Debug, Clone)]
pub struct KernelBuilder {
    n: usize,
    r: CMat,
    pending: Vec<CMat>,
    pending_rows: usize,
    reference: f64,
}

impl KernelBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            r: CMat::zeros(0, n),
            pending: Vec::new(),
            pending_rows: 0,
            reference: 0.0,
        }
    }

    /// Raises the scale against which singular values are judged. Needed when
    /// the pushed rows are differences that may cancel to rounding noise.
    pub fn set_reference(&mut self, scale: f64) {
        self.reference = self.reference.max(scale);
    }

    pub fn push(&mut self, rows: CMat) {
        assert_eq!(rows.ncols(), self.n, "constraint width mismatch");
        if rows.nrows() == 0 {
            return;
        }
        self.pending_rows += rows.nrows();
        self.pending.push(rows);
        if self.pending_rows >= 2 * self.n.max(8) {
            self.compress();
        }
    }

    fn compress(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let total = self.r.nrows() + self.pending_rows;
        let mut stacked = CMat::zeros(total, self.n);
        stacked.rows_mut(0, self.r.nrows()).copy_from(&self.r);
        let mut at = self.r.nrows();
        for block in self.pending.drain(..) {
            stacked.rows_mut(at, block.nrows()).copy_from(&block);
            at += block.nrows();
        }
        self.pending_rows = 0;
        self.r = if total > self.n { stacked.qr().r() } else { stacked };
    }

    pub fn finish(mut self, rel_tol: f64) -> NullSpace {
        self.compress();
        let n = self.n;
        let mut square = CMat::zeros(n, n);
        let k = self.r.nrows().min(n);
        square.rows_mut(0, k).copy_from(&self.r.rows(0, k));
        kernel_of_square(square, rel_tol, self.reference)
    }
}

fn kernel_of_square(a: CMat, rel_tol: f64, reference: f64) -> NullSpace {
    let n = a.ncols();
    if n == 0 {
        return NullSpace {
            basis: CMat::zeros(0, 0),
            singular_values: vec![],
            largest_null: 0.0,
            smallest_kept: 0.0,
        };
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv[0].max(reference);
    let thr = rel_tol * smax;
    let null_idx: Vec<usize> = order
        .iter()
        .zip(&sv)
        .filter(|(_, &s)| s <= thr || smax == 0.0)
        .map(|(&i, _)| i)
        .collect();
    let basis = CMat::from_fn(n, null_idx.len(), |r, c| v_t[(null_idx[c], r)].conj());
    let largest_null = sv
        .iter()
        .filter(|&&s| s <= thr || smax == 0.0)
        .fold(0.0_f64, |m, &s| m.max(s));
    let smallest_kept = sv
        .iter()
        .filter(|&&s| s > thr && smax > 0.0)
        .fold(f64::INFINITY, |m, &s| m.min(s));
    let scale = if smax > 0.0 { smax } else { 1.0 };
    NullSpace {
        basis,
        singular_values: sv,
        largest_null: largest_null / scale,
        smallest_kept: if smallest_kept.is_finite() {
            smallest_kept / scale
        } else {
            0.0
        },
    }
}

/// Kernel of the stacked system `blocks`, each with `n` columns.
///
/// A singular value counts as zero when it is at most `rel_tol` times the largest one.
pub fn null_space<'a, I>(blocks: I, n: usize, rel_tol: f64) -> NullSpace
where
    I: IntoIterator<Item = &'a CMat>,
{
    let mut builder = KernelBuilder::new(n);
    for b in blocks {
        builder.push(b.clone());
    }
    builder.finish(rel_tol)
}
