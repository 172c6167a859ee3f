//! Enumerations shared by every layer of the model.

use std::fmt;
use std::str::FromStr;

/// Error for textual enum parsing; carries the rejected token.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{token}`")]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
}

macro_rules! text_enum {
    ($(#[$doc:meta])* $name:ident, $kind:literal { $($variant:ident => $text:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let upper = s.trim().to_ascii_uppercase();
                $(
                    if upper == $text.to_ascii_uppercase() $(|| upper == $alias)* {
                        return Ok($name::$variant);
                    }
                )+
                Err(UnknownToken { kind: $kind, token: s.to_string() })
            }
        }
    };
}

pub(crate) use text_enum;

text_enum!(PartitionMode, "partition mode" {
    Idle => "IDLE",
    ColdStart => "COLD_START",
    WarmStart => "WARM_START",
    Normal => "NORMAL",
});

impl PartitionMode {
    pub fn is_start(self) -> bool {
        matches!(self, PartitionMode::ColdStart | PartitionMode::WarmStart)
    }
}

text_enum!(
    /// Process states. `Suspend` and `WaitandSuspend` refine the standard's
    /// single WAITING state.
    ProcessState, "process state" {
    Dormant => "Dormant" | "DORMANT",
    Ready => "Ready" | "READY",
    Running => "Running" | "RUNNING",
    Waiting => "Waiting" | "WAITING",
    Suspend => "Suspend" | "SUSPEND",
    WaitandSuspend => "WaitandSuspend" | "WAITANDSUSPEND",
});

impl ProcessState {
    /// Waiting, Suspend or WaitandSuspend.
    pub fn is_waiting_family(self) -> bool {
        matches!(
            self,
            ProcessState::Waiting | ProcessState::Suspend | ProcessState::WaitandSuspend
        )
    }

    /// The state name in the standard's four-state vocabulary.
    pub fn standard(self) -> ProcessState {
        if self.is_waiting_family() {
            ProcessState::Waiting
        } else {
            self
        }
    }

    pub fn is_suspended(self) -> bool {
        matches!(self, ProcessState::Suspend | ProcessState::WaitandSuspend)
    }
}

text_enum!(ReturnCode, "return code" {
    NoError => "NO_ERROR",
    NoAction => "NO_ACTION",
    NotAvailable => "NOT_AVAILABLE",
    InvalidParam => "INVALID_PARAM",
    InvalidConfig => "INVALID_CONFIG",
    InvalidMode => "INVALID_MODE",
    TimedOut => "TIMED_OUT",
});

text_enum!(Direction, "port direction" {
    Source => "SOURCE" | "SRC",
    Destination => "DESTINATION" | "DST" | "DEST",
});

text_enum!(Discipline, "queuing discipline" {
    Fifo => "FIFO",
    Priority => "PRIORITY",
});

text_enum!(ErrorCode, "error code" {
    DeadlineMissed => "DEADLINE_MISSED",
    ApplicationError => "APPLICATION_ERROR",
    NumericError => "NUMERIC_ERROR",
    IllegalRequest => "ILLEGAL_REQUEST",
    StackOverflow => "STACK_OVERFLOW",
    MemoryViolation => "MEMORY_VIOLATION",
    HardwareFault => "HARDWARE_FAULT",
    PowerFail => "POWER_FAIL",
});

text_enum!(ErrorLevel, "error level" {
    Module => "MODULE",
    Partition => "PARTITION",
    Process => "PROCESS",
});

text_enum!(RecoveryAction, "recovery action" {
    ModuleShutdown => "MODULE_SHUTDOWN" | "MLA_SHUTDOWN",
    ModuleReset => "MODULE_RESET",
    PartitionIdle => "PARTITION_IDLE" | "IDLE",
    PartitionColdRestart => "PARTITION_COLD_RESTART" | "COLD_START",
    PartitionWarmRestart => "PARTITION_WARM_RESTART" | "WARM_START",
    ProcessErrorHandler => "PROCESS_ERRORHANDLER" | "ERROR_HANDLER",
});

impl RecoveryAction {
    pub fn is_module_level(self) -> bool {
        matches!(self, RecoveryAction::ModuleShutdown | RecoveryAction::ModuleReset)
    }
}

text_enum!(
    /// Which text of a defective service is modeled.
    Variant, "variant" {
    AsWritten => "as_written",
    Corrected => "corrected",
});

text_enum!(
    /// Why a partition last entered a start mode.
    StartCondition, "start condition" {
    NormalStart => "NORMAL_START",
    PartitionRestart => "PARTITION_RESTART",
    HmModuleRestart => "HM_MODULE_RESTART",
    HmPartitionRestart => "HM_PARTITION_RESTART",
});

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VariantToggles {
    pub resume: Variant,
    pub send_queuing: Variant,
    pub receive_buffer: Variant,
}

impl Default for VariantToggles {
    fn default() -> Self {
        VariantToggles {
            resume: Variant::Corrected,
            send_queuing: Variant::Corrected,
            receive_buffer: Variant::Corrected,
        }
    }
}

/// Aperiodic processes have an infinite period; this is a distinct variant
/// rather than a sentinel number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Periodicity {
    Periodic { period: u64 },
    Aperiodic,
}

impl Periodicity {
    pub fn is_periodic(self) -> bool {
        matches!(self, Periodicity::Periodic { .. })
    }

    pub fn period(self) -> Duration {
        match self {
            Periodicity::Periodic { period } => Duration::Ticks(period),
            Periodicity::Aperiodic => Duration::Infinite,
        }
    }
}

/// A tick count or INFINITE_TIME_VALUE. Used for time capacities and
/// service time-outs; a zero time-out means "do not wait".
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Duration {
    Ticks(u64),
    Infinite,
}

impl Duration {
    pub fn is_zero(self) -> bool {
        self == Duration::Ticks(0)
    }

    pub fn ticks(self) -> Option<u64> {
        match self {
            Duration::Ticks(t) => Some(t),
            Duration::Infinite => None,
        }
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Duration::Ticks(t) => write!(f, "{t}"),
            Duration::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Duration {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinite") {
            return Ok(Duration::Infinite);
        }
        t.parse().map(Duration::Ticks).map_err(|_| UnknownToken {
            kind: "duration",
            token: s.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enum_text_round_trip() {
        for m in PartitionMode::ALL {
            assert_eq!(m.as_str().parse::<PartitionMode>().unwrap(), *m);
        }
        for c in ErrorCode::ALL {
            assert_eq!(c.as_str().parse::<ErrorCode>().unwrap(), *c);
        }
        assert_eq!("MLA_SHUTDOWN".parse::<RecoveryAction>().unwrap(), RecoveryAction::ModuleShutdown);
        assert_eq!("dst".parse::<Direction>().unwrap(), Direction::Destination);
        assert!("SIDEWAYS".parse::<Direction>().is_err());
    }

    #[test]
    fn durations() {
        assert_eq!("inf".parse::<Duration>().unwrap(), Duration::Infinite);
        assert_eq!("7".parse::<Duration>().unwrap(), Duration::Ticks(7));
        assert!(Duration::Ticks(0).is_zero());
        assert_eq!(Periodicity::Aperiodic.period(), Duration::Infinite);
    }
}
