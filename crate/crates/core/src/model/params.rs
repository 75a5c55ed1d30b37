use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{xavier_init_with, DenseMatrix, Tape, Var};
use crate::model::ArchitectureSpec;
use crate::scalar::Scalar;

/// Query/key/value projections of one attention head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams<T> {
    pub query: DenseMatrix<T>,
    pub key: DenseMatrix<T>,
    pub value: DenseMatrix<T>,
}

/// Heads of one fusion layer plus the `M·D_l × D_l` output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams<T> {
    pub heads: Vec<HeadParams<T>>,
    pub output: DenseMatrix<T>,
}

/// Every learnable tensor of the model, plus the cluster centers fixed by
/// K-means before joint training.
///
/// Index `l - 1` of each per-layer vector holds layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub cae_weights: Vec<DenseMatrix<T>>,
    pub cae_biases: Vec<DenseMatrix<T>>,
    pub gae_weights: Vec<DenseMatrix<T>>,
    pub fusion: Vec<FusionParams<T>>,
    pub centers: Option<DenseMatrix<T>>,
}

impl<T: Scalar> ModelParams<T> {
    /// Xavier-uniform weights, zero biases, no centers.
    pub fn xavier(spec: &ArchitectureSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = spec.num_layers();
        let mut cae_weights = Vec::with_capacity(layers);
        let mut cae_biases = Vec::with_capacity(layers);
        let mut gae_weights = Vec::with_capacity(layers);
        for l in 1..=layers {
            let (din, dout) = (spec.width(l - 1), spec.width(l));
            cae_weights.push(xavier_init_with(din, dout, &mut rng)?);
            cae_biases.push(DenseMatrix::zeros(1, dout));
        }
        for l in 1..=layers {
            gae_weights.push(xavier_init_with(spec.width(l - 1), spec.width(l), &mut rng)?);
        }
        let mut fusion = Vec::with_capacity(spec.num_fusion_layers());
        for l in 1..=spec.num_fusion_layers() {
            let d = spec.width(l);
            let heads = (0..spec.heads())
                .map(|_| {
                    Ok(HeadParams {
                        query: xavier_init_with(d, d, &mut rng)?,
                        key: xavier_init_with(d, d, &mut rng)?,
                        value: xavier_init_with(d, d, &mut rng)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let output = xavier_init_with(spec.heads() * d, d, &mut rng)?;
            fusion.push(FusionParams { heads, output });
        }
        Ok(Self {
            cae_weights,
            cae_biases,
            gae_weights,
            fusion,
            centers: None,
        })
    }

    /// Checks every tensor shape against `spec`.
    pub fn validate(&self, spec: &ArchitectureSpec) -> Result<()> {
        let mismatch = |what: String, got: (usize, usize), want: (usize, usize)| {
            Err(Error::Contract(format!("{what} has shape {got:?}, expected {want:?}")))
        };
        let layers = spec.num_layers();
        if self.cae_weights.len() != layers
            || self.cae_biases.len() != layers
            || self.gae_weights.len() != layers
            || self.fusion.len() != spec.num_fusion_layers()
        {
            return Err(Error::Contract(format!(
                "parameter layer counts do not match a {layers}-layer model"
            )));
        }
        for l in 1..=layers {
            let want = (spec.width(l - 1), spec.width(l));
            if self.cae_weights[l - 1].shape() != want {
                return mismatch(format!("CAE weight {l}"), self.cae_weights[l - 1].shape(), want);
            }
            if self.gae_weights[l - 1].shape() != want {
                return mismatch(format!("GAE weight {l}"), self.gae_weights[l - 1].shape(), want);
            }
            if self.cae_biases[l - 1].shape() != (1, want.1) {
                return mismatch(format!("CAE bias {l}"), self.cae_biases[l - 1].shape(), (1, want.1));
            }
        }
        for (i, f) in self.fusion.iter().enumerate() {
            let d = spec.width(i + 1);
            if f.heads.len() != spec.heads() {
                return Err(Error::Contract(format!(
                    "fusion layer {} has {} heads, expected {}",
                    i + 1,
                    f.heads.len(),
                    spec.heads()
                )));
            }
            for h in &f.heads {
                for m in [&h.query, &h.key, &h.value] {
                    if m.shape() != (d, d) {
                        return mismatch(format!("head projection in fusion layer {}", i + 1), m.shape(), (d, d));
                    }
                }
            }
            let want = (spec.heads() * d, d);
            if f.output.shape() != want {
                return mismatch(format!("fusion output {}", i + 1), f.output.shape(), want);
            }
        }
        if let Some(c) = &self.centers {
            let want = (spec.clusters(), spec.width(spec.middle()));
            if c.shape() != want {
                return mismatch("cluster centers".into(), c.shape(), want);
            }
        }
        Ok(())
    }

    /// Number of CAE tensors; they form the prefix of [`ModelParams::tensors`].
    pub fn num_cae_tensors(&self) -> usize {
        self.cae_weights.len() * 2
    }

    /// All trainable tensors in canonical order: CAE (weight, bias) per
    /// layer, GAE weights, then per fusion layer each head's q/k/v followed by
    /// the output projection. Centers are not included.
    pub fn tensors(&self) -> Vec<&DenseMatrix<T>> {
        let mut out = Vec::new();
        for (w, b) in self.cae_weights.iter().zip(&self.cae_biases) {
            out.push(w);
            out.push(b);
        }
        out.extend(self.gae_weights.iter());
        for f in &self.fusion {
            for h in &f.heads {
                out.extend([&h.query, &h.key, &h.value]);
            }
            out.push(&f.output);
        }
        out
    }

    /// Mutable counterpart of [`ModelParams::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix<T>> {
        let mut out = Vec::new();
        for (w, b) in self.cae_weights.iter_mut().zip(self.cae_biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out.extend(self.gae_weights.iter_mut());
        for f in &mut self.fusion {
            for h in &mut f.heads {
                out.push(&mut h.query);
                out.push(&mut h.key);
                out.push(&mut h.value);
            }
            out.push(&mut f.output);
        }
        out
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.tensors().iter().map(|m| m.shape()).collect()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|m| m.len()).sum()
    }

    /// Records every trainable tensor on `tape` as a parameter leaf.
    pub fn register<'g>(&'g self, tape: &mut Tape<'g, T>) -> ParamVars {
        let (cae_weights, cae_biases) = self.register_cae(tape);
        let gae_weights = self
            .gae_weights
            .iter()
            .map(|w| tape.parameter_ref(w))
            .collect();
        let fusion = self
            .fusion
            .iter()
            .map(|f| FusionVars {
                heads: f
                    .heads
                    .iter()
                    .map(|h| HeadVars {
                        query: tape.parameter_ref(&h.query),
                        key: tape.parameter_ref(&h.key),
                        value: tape.parameter_ref(&h.value),
                    })
                    .collect(),
                output: tape.parameter_ref(&f.output),
            })
            .collect();
        ParamVars {
            cae_weights,
            cae_biases,
            gae_weights,
            fusion,
        }
    }

    /// Records only the CAE weights and biases.
    pub fn register_cae<'g>(&'g self, tape: &mut Tape<'g, T>) -> (Vec<Var>, Vec<Var>) {
        self.cae_weights
            .iter()
            .zip(&self.cae_biases)
            .map(|(w, b)| (tape.parameter_ref(w), tape.parameter_ref(b)))
            .unzip()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HeadVars {
    pub query: Var,
    pub key: Var,
    pub value: Var,
}

#[derive(Debug, Clone)]
pub struct FusionVars {
    pub heads: Vec<HeadVars>,
    pub output: Var,
}

/// Tape handles mirroring [`ModelParams`].
#[derive(Debug, Clone)]
pub struct ParamVars {
    pub cae_weights: Vec<Var>,
    pub cae_biases: Vec<Var>,
    pub gae_weights: Vec<Var>,
    pub fusion: Vec<FusionVars>,
}

impl ParamVars {
    /// Handles in the same order as [`ModelParams::tensors`].
    pub fn all(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for (&w, &b) in self.cae_weights.iter().zip(&self.cae_biases) {
            out.push(w);
            out.push(b);
        }
        out.extend(&self.gae_weights);
        for f in &self.fusion {
            for h in &f.heads {
                out.extend([h.query, h.key, h.value]);
            }
            out.push(f.output);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ArchitectureSpec {
        ArchitectureSpec::new(vec![5, 4, 2, 3, 5], 3, 0.5, 2).unwrap()
    }

    #[test]
    fn xavier_shapes_validate() {
        let spec = small_spec();
        let p = ModelParams::<f64>::xavier(&spec, 1).unwrap();
        p.validate(&spec).unwrap();
        assert_eq!(p.fusion.len(), 3);
        assert_eq!(p.fusion[1].output.shape(), (6, 2));
        assert!(p.cae_biases.iter().all(|b| b.sum() == 0.0));
    }

    #[test]
    fn registration_order_matches_tensors() {
        let spec = small_spec();
        let p = ModelParams::<f64>::xavier(&spec, 9).unwrap();
        let mut tape = Tape::new();
        let vars = p.register(&mut tape);
        let all = vars.all();
        let tensors = p.tensors();
        assert_eq!(all.len(), tensors.len());
        for (v, t) in all.iter().zip(&tensors) {
            assert_eq!(tape.value(*v), *t);
        }
        let mut q = p.clone();
        assert_eq!(q.tensors_mut().len(), tensors.len());
        assert_eq!(p.num_cae_tensors(), 8);
    }

    #[test]
    fn wrong_center_shape_rejected() {
        let spec = small_spec();
        let mut p = ModelParams::<f64>::xavier(&spec, 2).unwrap();
        p.centers = Some(DenseMatrix::zeros(3, 2));
        assert!(p.validate(&spec).is_err());
        p.centers = Some(DenseMatrix::zeros(2, 2));
        assert!(p.validate(&spec).is_ok());
    }

    #[test]
    fn seeds_are_deterministic() {
        let spec = small_spec();
        assert_eq!(
            ModelParams::<f64>::xavier(&spec, 5).unwrap(),
            ModelParams::<f64>::xavier(&spec, 5).unwrap()
        );
    }
}
