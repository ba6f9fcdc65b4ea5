use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gru::GruParams;
use super::linalg::Linear;
use super::mlp::MlpParams;
use super::sage::SageParams;
use super::weights::{ParamArray, WeightBundle, WeightError};

/// Layer widths of the learned simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Flow and link hidden-state width.
    pub hidden: usize,
    /// GraphSAGE embedding width.
    pub gnn: usize,
    /// Hidden width of the output MLPs.
    pub mlp_hidden: usize,
    pub gnn_layers: usize,
    pub config: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            hidden: 400,
            gnn: 300,
            mlp_hidden: 200,
            gnn_layers: 3,
            config: crate::netmodel::CONFIG_VECTOR_LEN,
        }
    }
}

impl ModelDims {
    pub fn small(hidden: usize, gnn: usize, mlp_hidden: usize) -> Self {
        Self {
            hidden,
            gnn,
            mlp_hidden,
            ..Self::default()
        }
    }
}

/// Input scalings; stored in bundle metadata so trainer and runtime agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConstants {
    /// Elapsed time is divided by this (seconds).
    pub dt_scale_s: f64,
    /// `log10(size)` is divided by this.
    pub size_log_scale: f64,
    /// Path length is divided by this.
    pub nlinks_scale: f64,
}

impl Default for NormConstants {
    fn default() -> Self {
        Self {
            dt_scale_s: 1e-3,
            size_log_scale: 7.0,
            nlinks_scale: 8.0,
        }
    }
}

/// Every parameter of the learned simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub dims: ModelDims,
    pub norm: NormConstants,
    pub link_init: Linear,
    pub flow_init: Linear,
    pub gru_link_time: GruParams,
    pub gru_flow_time: GruParams,
    pub sage: Vec<SageParams>,
    pub gru_link_space: GruParams,
    pub gru_flow_space: GruParams,
    pub mlp_sldn: MlpParams,
    pub mlp_size: MlpParams,
    pub mlp_queue: MlpParams,
}

const META_KEYS: [&str; 8] = [
    "hidden_dim",
    "gnn_dim",
    "mlp_hidden",
    "gnn_layers",
    "config_dim",
    "dt_scale_s",
    "size_log_scale",
    "nlinks_scale",
];

impl ModelWeights {
    pub fn zeros(dims: ModelDims) -> Self {
        let (h, g, m, c) = (dims.hidden, dims.gnn, dims.mlp_hidden, dims.config);
        let sage = (0..dims.gnn_layers)
            .map(|i| SageParams::zeros(if i == 0 { h } else { g }, g))
            .collect();
        Self {
            dims,
            norm: NormConstants::default(),
            link_init: Linear::zeros(1, h),
            flow_init: Linear::zeros(2, h),
            gru_link_time: GruParams::zeros(1 + c, h),
            gru_flow_time: GruParams::zeros(1 + c, h),
            sage,
            gru_link_space: GruParams::zeros(g + c, h),
            gru_flow_space: GruParams::zeros(g + c, h),
            mlp_sldn: MlpParams::zeros(h + 1 + c, m, 1),
            mlp_size: MlpParams::zeros(h + 1 + c, m, 1),
            mlp_queue: MlpParams::zeros(h + c, m, 1),
        }
    }

    /// Uniform `±scale/sqrt(fan_in)` initialization from a seed.
    pub fn random(dims: ModelDims, seed: u64, scale: f32) -> Self {
        let mut w = Self::zeros(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        w.for_each_tensor(|_, fan_in, values| {
            let bound = scale / crate::math::sqrt(fan_in.max(1) as f64) as f32;
            for v in values {
                *v = rng.random_range(-bound..=bound);
            }
        });
        w
    }

    pub fn n_params(&self) -> usize {
        let mut n = 0;
        let mut me = self.clone();
        me.for_each_tensor(|_, _, v| n += v.len());
        n
    }

    /// Visits every tensor as `(name, fan_in, values)` in canonical order.
    fn for_each_tensor(&mut self, mut f: impl FnMut(&str, usize, &mut [f32])) {
        fn lin(f: &mut impl FnMut(&str, usize, &mut [f32]), name: &str, l: &mut Linear) {
            f(&format!("{name}.weight"), l.in_dim, &mut l.weight);
            f(&format!("{name}.bias"), l.in_dim, &mut l.bias);
        }
        fn gru(f: &mut impl FnMut(&str, usize, &mut [f32]), name: &str, g: &mut GruParams) {
            f(&format!("{name}.weight_ih"), g.hidden_dim, &mut g.weight_ih);
            f(&format!("{name}.weight_hh"), g.hidden_dim, &mut g.weight_hh);
            f(&format!("{name}.bias"), g.hidden_dim, &mut g.bias);
        }
        fn mlp(f: &mut impl FnMut(&str, usize, &mut [f32]), name: &str, m: &mut MlpParams) {
            lin(f, &format!("{name}.0"), &mut m.layer1);
            lin(f, &format!("{name}.1"), &mut m.layer2);
        }
        lin(&mut f, "link_init", &mut self.link_init);
        lin(&mut f, "flow_init", &mut self.flow_init);
        gru(&mut f, "gru_link_time", &mut self.gru_link_time);
        gru(&mut f, "gru_flow_time", &mut self.gru_flow_time);
        for (i, s) in self.sage.iter_mut().enumerate() {
            f(&format!("sage.{i}.weight_self"), s.in_dim, &mut s.weight_self);
            f(&format!("sage.{i}.weight_neigh"), s.in_dim, &mut s.weight_neigh);
            f(&format!("sage.{i}.bias"), s.in_dim, &mut s.bias);
        }
        gru(&mut f, "gru_link_space", &mut self.gru_link_space);
        gru(&mut f, "gru_flow_space", &mut self.gru_flow_space);
        mlp(&mut f, "mlp_sldn", &mut self.mlp_sldn);
        mlp(&mut f, "mlp_size", &mut self.mlp_size);
        mlp(&mut f, "mlp_queue", &mut self.mlp_queue);
    }

    /// Expected `(name, shape)` list in canonical order.
    pub fn manifest(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut me = self.clone();
        let shapes = me.shapes();
        me.for_each_tensor(|name, _, _| out.push(name.to_string()));
        out.into_iter().zip(shapes).collect()
    }

    fn shapes(&self) -> Vec<Vec<usize>> {
        let lin = |l: &Linear| [vec![l.out_dim, l.in_dim], vec![l.out_dim]];
        let gru = |g: &GruParams| {
            [
                vec![3 * g.hidden_dim, g.input_dim],
                vec![3 * g.hidden_dim, g.hidden_dim],
                vec![3 * g.hidden_dim],
            ]
        };
        let mut s: Vec<Vec<usize>> = Vec::new();
        s.extend(lin(&self.link_init));
        s.extend(lin(&self.flow_init));
        s.extend(gru(&self.gru_link_time));
        s.extend(gru(&self.gru_flow_time));
        for p in &self.sage {
            s.push(vec![p.out_dim, p.in_dim]);
            s.push(vec![p.out_dim, p.in_dim]);
            s.push(vec![p.out_dim]);
        }
        s.extend(gru(&self.gru_link_space));
        s.extend(gru(&self.gru_flow_space));
        for m in [&self.mlp_sldn, &self.mlp_size, &self.mlp_queue] {
            s.extend(lin(&m.layer1));
            s.extend(lin(&m.layer2));
        }
        s
    }

    pub fn to_bundle(&self) -> WeightBundle {
        let mut b = WeightBundle::new();
        let d = self.dims;
        b.set_meta("hidden_dim", d.hidden);
        b.set_meta("gnn_dim", d.gnn);
        b.set_meta("mlp_hidden", d.mlp_hidden);
        b.set_meta("gnn_layers", d.gnn_layers);
        b.set_meta("config_dim", d.config);
        b.set_meta("dt_scale_s", self.norm.dt_scale_s);
        b.set_meta("size_log_scale", self.norm.size_log_scale);
        b.set_meta("nlinks_scale", self.norm.nlinks_scale);
        let shapes = self.shapes();
        let mut me = self.clone();
        let mut i = 0;
        me.for_each_tensor(|name, _, values| {
            let p = ParamArray {
                name: name.to_string(),
                shape: shapes[i].clone(),
                values: values.to_vec(),
            };
            i += 1;
            b.push(p).expect("canonical names are unique");
        });
        b
    }

    /// Reads dims and normalization from metadata, then every parameter by
    /// name with a shape check. Extra parameters are an error.
    pub fn from_bundle(b: &WeightBundle) -> Result<Self, WeightError> {
        for k in META_KEYS {
            if b.meta(k).is_none() {
                return Err(WeightError::BadMetadata(format!("missing key {k}")));
            }
        }
        let usize_key = |k: &str| -> Result<usize, WeightError> {
            b.meta(k)
                .unwrap_or_default()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| WeightError::BadMetadata(format!("{k} must be a positive integer")))
        };
        let f64_key = |k: &str| -> Result<f64, WeightError> {
            b.meta(k)
                .unwrap_or_default()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| WeightError::BadMetadata(format!("{k} must be a positive number")))
        };
        let dims = ModelDims {
            hidden: usize_key("hidden_dim")?,
            gnn: usize_key("gnn_dim")?,
            mlp_hidden: usize_key("mlp_hidden")?,
            gnn_layers: usize_key("gnn_layers")?,
            config: usize_key("config_dim")?,
        };
        if dims.config != crate::netmodel::CONFIG_VECTOR_LEN {
            return Err(WeightError::BadMetadata(format!(
                "config_dim {} differs from the config vector length {}",
                dims.config,
                crate::netmodel::CONFIG_VECTOR_LEN
            )));
        }
        let norm = NormConstants {
            dt_scale_s: f64_key("dt_scale_s")?,
            size_log_scale: f64_key("size_log_scale")?,
            nlinks_scale: f64_key("nlinks_scale")?,
        };
        let mut w = Self::zeros(dims);
        w.norm = norm;
        let manifest = w.manifest();
        for (name, shape) in &manifest {
            b.expect(name, shape)?;
        }
        if b.params().len() != manifest.len() {
            let extra = b
                .params()
                .iter()
                .find(|p| !manifest.iter().any(|(n, _)| *n == p.name))
                .map(|p| p.name.clone())
                .unwrap_or_default();
            return Err(WeightError::CorruptManifest(format!("unexpected parameter {extra}")));
        }
        w.for_each_tensor(|name, _, values| {
            values.copy_from_slice(&b.get(name).expect("checked above").values);
        });
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dims_parameter_count() {
        let w = ModelWeights::zeros(ModelDims::default());
        let n = w.n_params();
        // GRUs dominate: 2·3·400·(9+400) + 2·3·400·(308+400) plus biases.
        assert!(n > 3_400_000 && n < 3_700_000, "{n}");
    }

    #[test]
    fn bundle_round_trip() {
        let w = ModelWeights::random(ModelDims::small(6, 5, 4), 3, 1.0);
        let b = w.to_bundle();
        let back = ModelWeights::from_bundle(&WeightBundle::decode(&b.encode()).unwrap()).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn missing_and_misshapen_params() {
        let w = ModelWeights::zeros(ModelDims::small(4, 3, 2));
        let mut b = WeightBundle::new();
        b.metadata = w.to_bundle().metadata;
        assert!(matches!(ModelWeights::from_bundle(&b), Err(WeightError::MissingParam(_))));

        let other = ModelWeights::zeros(ModelDims::small(4, 3, 3)).to_bundle();
        let mut mixed = other.clone();
        mixed.metadata = w.to_bundle().metadata;
        assert!(matches!(
            ModelWeights::from_bundle(&mixed),
            Err(WeightError::ShapeMismatch { .. })
        ));

        let mut bad = other;
        bad.set_meta("hidden_dim", "four");
        assert!(matches!(ModelWeights::from_bundle(&bad), Err(WeightError::BadMetadata(_))));
    }
}
