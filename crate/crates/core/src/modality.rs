use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The five interaction surfaces a benchmark sample or record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "GUI")]
    Gui,
    Text,
    Table,
    Canvas,
    Image,
}

impl Modality {
    pub const ALL: [Modality; 5] = [
        Modality::Gui,
        Modality::Text,
        Modality::Table,
        Modality::Canvas,
        Modality::Image,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Gui => "GUI",
            Modality::Text => "Text",
            Modality::Table => "Table",
            Modality::Canvas => "Canvas",
            Modality::Image => "Image",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "gui" => Ok(Modality::Gui),
            "text" => Ok(Modality::Text),
            "table" => Ok(Modality::Table),
            "canvas" => Ok(Modality::Canvas),
            "image" | "natural image" | "natural_image" => Ok(Modality::Image),
            other => Err(Error::InvalidArgument(format!("unknown modality `{other}`"))),
        }
    }
}
