//! Identifier newtypes.
//!
//! Static components (partitions, processes, ports, channels and the
//! intra-partition objects) are numbered by their position in the scenario
//! tables; the scenario keeps the human-readable names.

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident, $inner:ty, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub $inner);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(PartitionId, u16, "part#");
id_type!(ProcessId, u16, "proc#");
id_type!(
    /// Sampling and queuing ports share one numbering.
    PortId,
    u16,
    "port#"
);
id_type!(ChannelId, u16, "chan#");
id_type!(BufferId, u16, "buf#");
id_type!(BlackboardId, u16, "bb#");
id_type!(SemaphoreId, u16, "sem#");
id_type!(EventId, u16, "evt#");
id_type!(
    /// Opaque message identity. Payloads are not modeled.
    MessageId,
    u32,
    "m"
);
