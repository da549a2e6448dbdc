//! Granularity levels and their coarseness order.
//!
//! Temporal `secondly < minutely < ... < yearly`, spatial `street < zone`,
//! abstraction `detail < aggregation < statistic`. Purpose has no order.
//! `any` is a wildcard standing for every level of its dimension.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Dimension {
    Temporal,
    Spatial,
    Abstraction,
    Purpose,
}

impl Dimension {
    /// Predicate naming this dimension in compiled theories.
    pub fn predicate(self) -> &'static str {
        match self {
            Dimension::Temporal => "TemporalScope",
            Dimension::Spatial => "SpatialScope",
            Dimension::Abstraction => "AbstractScope",
            Dimension::Purpose => "PurposeScope",
        }
    }
}

/// A level of one granularity dimension.
pub trait Granularity: Copy + Ord + fmt::Debug + 'static {
    const DIMENSION: Dimension;

    /// Every value in declaration order, wildcard last.
    fn all() -> &'static [Self];

    /// Position in the coarseness chain; `None` for the wildcard and for
    /// unordered dimensions.
    fn rank(self) -> Option<u8>;

    fn is_any(self) -> bool;

    /// Constant used for this level in rule text.
    fn constant(self) -> &'static str;

    /// Element name in the XML encoding.
    fn xml_name(self) -> &'static str;

    /// True iff a grant at `self` covers a request at `requested`: the
    /// grant is `any`, the levels are equal, or the request is strictly
    /// coarser.
    fn subsumes(self, requested: Self) -> bool {
        if self.is_any() || self == requested {
            return true;
        }
        matches!((self.rank(), requested.rank()), (Some(g), Some(r)) if r > g)
    }

    /// Concrete levels strictly coarser than `self` (none for `any`).
    fn coarser(self) -> Vec<Self> {
        Self::all()
            .iter()
            .copied()
            .filter(|&l| !l.is_any() && l != self && self.subsumes(l) && !self.is_any())
            .collect()
    }

    /// Concrete levels strictly finer than `self`.
    fn finer(self) -> Vec<Self> {
        Self::all()
            .iter()
            .copied()
            .filter(|&l| !l.is_any() && l != self && l.subsumes(self))
            .collect()
    }

    /// Every concrete level of the dimension.
    fn levels() -> Vec<Self> {
        Self::all()
            .iter()
            .copied()
            .filter(|l| !l.is_any())
            .collect()
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| *c != '_' && *c != '-')
        .flat_map(char::to_lowercase)
        .collect()
}

macro_rules! scope_enum {
    (
        $(#[$meta:meta])*
        $name:ident : $dim:expr ;
        $( $variant:ident => $xml:literal, $konst:literal, $rank:expr ; )*
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "camelCase")]
        pub enum $name {
            $( $variant, )*
        }

        impl Granularity for $name {
            const DIMENSION: Dimension = $dim;

            fn all() -> &'static [Self] {
                &[$( $name::$variant, )*]
            }

            fn rank(self) -> Option<u8> {
                match self {
                    $( $name::$variant => $rank, )*
                }
            }

            fn is_any(self) -> bool {
                self.constant() == "any"
            }

            fn constant(self) -> &'static str {
                match self {
                    $( $name::$variant => $konst, )*
                }
            }

            fn xml_name(self) -> &'static str {
                match self {
                    $( $name::$variant => $xml, )*
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.constant())
            }
        }

        impl FromStr for $name {
            type Err = ModelError;

            /// Accepts the rule constant or the XML element name, ignoring
            /// case and underscores.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let n = normalize(s);
                Self::all()
                    .iter()
                    .copied()
                    .find(|v| normalize(v.constant()) == n || normalize(v.xml_name()) == n)
                    .ok_or_else(|| ModelError::UnknownScopeValue {
                        element: stringify!($name).to_string(),
                        value: s.to_string(),
                    })
            }
        }
    };
}

scope_enum! {
    TemporalLevel : Dimension::Temporal;
    Secondly => "Secondly", "secondly", Some(0);
    Minutely => "Minutely", "minutely", Some(1);
    Hourly => "Hourly", "hourly", Some(2);
    Daily => "Daily", "daily", Some(3);
    Weekly => "Weekly", "weekly", Some(4);
    Monthly => "Monthly", "monthly", Some(5);
    Yearly => "Yearly", "yearly", Some(6);
    Any => "Any", "any", None;
}

scope_enum! {
    SpatialLevel : Dimension::Spatial;
    Street => "Street", "street", Some(0);
    Zone => "Zone", "zone", Some(1);
    Any => "Any", "any", None;
}

scope_enum! {
    /// `Statistic` extends the XML vocabulary; it ranks above aggregation.
    AbstractionLevel : Dimension::Abstraction;
    Detail => "Detail", "detail", Some(0);
    Aggregation => "Aggregation", "aggregation", Some(1);
    Statistic => "Statistic", "statistic", Some(2);
    Any => "Any", "any", None;
}

scope_enum! {
    PurposeLevel : Dimension::Purpose;
    CommercialUse => "CommercialUse", "commercial_use", None;
    Any => "Any", "any", None;
}

impl AbstractionLevel {
    /// Element order inside `AbstractScope` in the XML encoding.
    pub(crate) const XML_ORDER: [AbstractionLevel; 4] = [
        AbstractionLevel::Aggregation,
        AbstractionLevel::Detail,
        AbstractionLevel::Statistic,
        AbstractionLevel::Any,
    ];
}

/// Class of a data consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ActorClass {
    #[serde(alias = "DO")]
    DataOwner,
    #[serde(alias = "MA")]
    MunicipalAuthority,
    #[serde(alias = "CO")]
    CommercialOperator,
}

impl ActorClass {
    pub const ALL: [ActorClass; 3] = [
        ActorClass::DataOwner,
        ActorClass::MunicipalAuthority,
        ActorClass::CommercialOperator,
    ];

    /// Predicate asserting membership of this class, e.g. `MA(city)`.
    pub fn predicate(self) -> &'static str {
        match self {
            ActorClass::DataOwner => "DO",
            ActorClass::MunicipalAuthority => "MA",
            ActorClass::CommercialOperator => "CO",
        }
    }

    pub fn xml_name(self) -> &'static str {
        match self {
            ActorClass::DataOwner => "DataOwner",
            ActorClass::MunicipalAuthority => "MunicipalAuthority",
            ActorClass::CommercialOperator => "CommercialOperator",
        }
    }

    pub fn from_predicate(p: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.predicate() == p)
    }
}

impl fmt::Display for ActorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate())
    }
}

impl FromStr for ActorClass {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n = normalize(s);
        Self::ALL
            .into_iter()
            .find(|a| normalize(a.predicate()) == n || normalize(a.xml_name()) == n)
            .ok_or_else(|| ModelError::UnknownScopeValue {
                element: "ActorScope".into(),
                value: s.into(),
            })
    }
}

/// A level tagged with its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScopeValue {
    Temporal(TemporalLevel),
    Spatial(SpatialLevel),
    Abstraction(AbstractionLevel),
    Purpose(PurposeLevel),
}

impl ScopeValue {
    pub fn dimension(self) -> Dimension {
        match self {
            ScopeValue::Temporal(_) => Dimension::Temporal,
            ScopeValue::Spatial(_) => Dimension::Spatial,
            ScopeValue::Abstraction(_) => Dimension::Abstraction,
            ScopeValue::Purpose(_) => Dimension::Purpose,
        }
    }

    pub fn constant(self) -> &'static str {
        match self {
            ScopeValue::Temporal(l) => l.constant(),
            ScopeValue::Spatial(l) => l.constant(),
            ScopeValue::Abstraction(l) => l.constant(),
            ScopeValue::Purpose(l) => l.constant(),
        }
    }
}

/// Whether a grant at `granted` covers a request at `requested` in `dimension`.
pub fn subsumes(
    granted: ScopeValue,
    requested: ScopeValue,
    dimension: Dimension,
) -> Result<bool, ModelError> {
    for v in [granted, requested] {
        if v.dimension() != dimension {
            return Err(ModelError::DimensionMismatch {
                value: v.constant().to_string(),
                dimension,
            });
        }
    }
    Ok(match (granted, requested) {
        (ScopeValue::Temporal(g), ScopeValue::Temporal(r)) => g.subsumes(r),
        (ScopeValue::Spatial(g), ScopeValue::Spatial(r)) => g.subsumes(r),
        (ScopeValue::Abstraction(g), ScopeValue::Abstraction(r)) => g.subsumes(r),
        (ScopeValue::Purpose(g), ScopeValue::Purpose(r)) => g.subsumes(r),
        _ => unreachable!("dimensions checked above"),
    })
}
