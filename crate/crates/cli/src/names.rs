//! Scheme and check names shared by configs and command-line flags.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

/// Error for a name outside a fixed vocabulary; lists the valid names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownName {
    pub kind: &'static str,
    pub name: String,
    pub expected: Vec<&'static str>,
}

impl fmt::Display for UnknownName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown {} `{}` (expected one of: {})", self.kind, self.name, self.expected.join(", "))
    }
}

impl std::error::Error for UnknownName {}

macro_rules! vocabulary {
    ($ty:ident, $kind:literal, { $($variant:ident => $name:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
        #[serde(try_from = "String")]
        pub enum $ty {
            $($variant),+
        }

        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn name(&self) -> &'static str {
                match self {
                    $($ty::$variant => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = UnknownName;

            fn from_str(s: &str) -> Result<Self, UnknownName> {
                Self::ALL.iter().copied().find(|v| v.name() == s).ok_or_else(|| UnknownName {
                    kind: $kind,
                    name: s.to_string(),
                    expected: Self::ALL.iter().map(|v| v.name()).collect(),
                })
            }
        }

        impl TryFrom<String> for $ty {
            type Error = UnknownName;

            fn try_from(s: String) -> Result<Self, UnknownName> {
                s.parse()
            }
        }
    };
}

vocabulary!(Scheme, "scheme", {
    ProjectedSingle => "projected_single",
    ProjectedPair => "projected_pair",
    ConstraintConstant => "constraint_constant",
    ConstraintOscillating => "constraint_oscillating",
    Rotated => "rotated",
});

vocabulary!(CheckName, "check", {
    FConvolution => "f_convolution",
    KernelRelation => "kernel_relation",
    MatrixLaplace => "matrix_laplace",
    LaplaceSolution => "laplace_solution",
    SumRule => "sum_rule",
    ExactDynamics => "exact_dynamics",
});

// The enum is generated by a macro, so `#[default]` cannot be attached.
#[allow(clippy::derivable_impls)]
impl Default for Scheme {
    fn default() -> Self {
        Scheme::ProjectedSingle
    }
}

impl CheckName {
    pub fn default_tolerance(&self) -> f64 {
        match self {
            CheckName::FConvolution | CheckName::KernelRelation => 1e-5,
            CheckName::MatrixLaplace | CheckName::LaplaceSolution => 1e-8,
            CheckName::SumRule => 1e-10,
            CheckName::ExactDynamics => 2e-4,
        }
    }
}
