//! Versioned JSON container for trained networks.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::MlpNetwork;
use crate::rbf::RbfNetwork;

pub const FORMAT_NAME: &str = "wecs-network";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NetworkModel {
    Mlp(MlpNetwork),
    Rbf(RbfNetwork),
}

impl NetworkModel {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Mlp(_) => "mlp",
            Self::Rbf(_) => "rbf",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: NetworkModel,
}

pub fn save_model<W: Write>(model: &NetworkModel, out: W) -> Result<()> {
    let env = Envelope {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        model: model.clone(),
    };
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &env)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn load_model<R: Read>(input: R) -> Result<NetworkModel> {
    let env: Envelope = serde_json::from_reader(input)?;
    if env.format != FORMAT_NAME {
        return Err(Error::Parse(format!(
            "not a network file (format `{}`)",
            env.format
        )));
    }
    if env.version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported network file version {}",
            env.version
        )));
    }
    match &env.model {
        NetworkModel::Mlp(net) => net.validate()?,
        NetworkModel::Rbf(net) => net.validate()?,
    }
    Ok(env.model)
}
