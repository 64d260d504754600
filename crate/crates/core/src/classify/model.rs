//! Trained models and their binary format.

use std::path::Path;

use super::{ClassifyError, KernelParams, SvmModel};
use crate::binio::{LeReader, LeWriter};
use crate::encode::{Codebook, Segment};

pub const MODL_MAGIC: &[u8; 4] = b"MODL";
pub const MODL_VERSION: u16 = 1;

/// Everything needed to classify a new sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub svm: SvmModel,
    /// Mean probe depth of the training points, in millimeters.
    pub z_bar0: f64,
    pub layout: Vec<Segment>,
    pub codebooks: Vec<Codebook>,
    /// Pipeline settings the model was trained with, as `key = value` pairs.
    pub params: Vec<(String, String)>,
}

impl TrainedModel {
    /// Checks that the layout spans the SVM input and that every codebook
    /// matches the segment of the same name.
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let total: usize = self.layout.iter().map(|s| s.len).sum();
        if total != self.svm.dim {
            return Err(ClassifyError::LayoutMismatch {
                expected: self.svm.dim,
                found: total,
            });
        }
        for cb in &self.codebooks {
            if let Some(seg) = self.layout.iter().find(|s| s.name == cb.label) {
                if seg.len != cb.k {
                    return Err(ClassifyError::LayoutMismatch {
                        expected: seg.len,
                        found: cb.k,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn encode(&self) -> Vec<u8> {
        let m = &self.svm;
        let mut w = LeWriter::new();
        w.bytes(MODL_MAGIC).u16(MODL_VERSION);
        w.f64(m.kernel.gamma).f64(m.c).f64(self.z_bar0);
        w.u32(m.classes.len() as u32);
        for &c in &m.classes {
            w.u32(c);
        }
        w.u32(m.dim as u32).u32(m.supports.len() as u32);
        for s in &m.supports {
            for &v in s {
                w.f64(v);
            }
        }
        for (coefs, &b) in m.coefs.iter().zip(&m.bias) {
            for &a in coefs {
                w.f64(a);
            }
            w.f64(b);
        }
        w.u32(self.layout.len() as u32);
        for s in &self.layout {
            w.str(&s.name).u32(s.offset as u32).u32(s.len as u32);
        }
        w.u32(self.codebooks.len() as u32);
        for cb in &self.codebooks {
            let bytes = cb.encode();
            w.str(&cb.label).u32(bytes.len() as u32).bytes(&bytes);
        }
        w.u32(self.params.len() as u32);
        for (k, v) in &self.params {
            w.str(k).str(v);
        }
        w.into_inner()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ClassifyError> {
        let mut r = LeReader::new(bytes);
        let t = || ClassifyError::Format("truncated".into());
        if r.take(4) != Some(&MODL_MAGIC[..]) {
            return Err(ClassifyError::Format("bad magic".into()));
        }
        let version = r.u16().ok_or_else(t)?;
        if version != MODL_VERSION {
            return Err(ClassifyError::Format(format!("unsupported version {version}")));
        }
        let gamma = r.f64().ok_or_else(t)?;
        let c = r.f64().ok_or_else(t)?;
        let z_bar0 = r.f64().ok_or_else(t)?;
        let n_classes = r.u32().ok_or_else(t)? as usize;
        let classes = (0..n_classes).map(|_| r.u32().ok_or_else(t)).collect::<Result<Vec<_>, _>>()?;
        let dim = r.u32().ok_or_else(t)? as usize;
        let n_sup = r.u32().ok_or_else(t)? as usize;
        // every value takes at least one byte, so this bounds allocations
        if n_sup.saturating_mul(dim) > r.remaining() || n_classes > r.remaining() {
            return Err(t());
        }
        let mut supports = Vec::with_capacity(n_sup);
        for _ in 0..n_sup {
            supports.push((0..dim).map(|_| r.f64().ok_or_else(t)).collect::<Result<Vec<_>, _>>()?);
        }
        let mut coefs = Vec::with_capacity(n_classes);
        let mut bias = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            coefs.push((0..n_sup).map(|_| r.f64().ok_or_else(t)).collect::<Result<Vec<_>, _>>()?);
            bias.push(r.f64().ok_or_else(t)?);
        }
        let n_seg = r.u32().ok_or_else(t)? as usize;
        let mut layout = Vec::new();
        for _ in 0..n_seg {
            let name = r.str().ok_or_else(t)?;
            let offset = r.u32().ok_or_else(t)? as usize;
            let len = r.u32().ok_or_else(t)? as usize;
            layout.push(Segment { name, offset, len });
        }
        let n_cb = r.u32().ok_or_else(t)? as usize;
        let mut codebooks = Vec::new();
        for _ in 0..n_cb {
            let label = r.str().ok_or_else(t)?;
            let len = r.u32().ok_or_else(t)? as usize;
            let mut cb = Codebook::decode(r.take(len).ok_or_else(t)?)?;
            cb.label = label;
            codebooks.push(cb);
        }
        let n_params = r.u32().ok_or_else(t)? as usize;
        let mut params = Vec::new();
        for _ in 0..n_params {
            let k = r.str().ok_or_else(t)?;
            let v = r.str().ok_or_else(t)?;
            params.push((k, v));
        }
        if r.remaining() != 0 {
            return Err(ClassifyError::Format(format!("{} trailing bytes", r.remaining())));
        }
        let model = Self {
            svm: SvmModel {
                classes,
                dim,
                kernel: KernelParams { gamma },
                c,
                supports,
                coefs,
                bias,
                dual_history: Vec::new(),
            },
            z_bar0,
            layout,
            codebooks,
            params,
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn write_model(path: &Path, model: &TrainedModel) -> Result<(), ClassifyError> {
    std::fs::write(path, model.encode())?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<TrainedModel, ClassifyError> {
    TrainedModel::decode(&std::fs::read(path)?)
}
