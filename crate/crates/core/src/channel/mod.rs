//! Linear time-varying multipath channels: random EVA/Jakes realizations, direct
//! time-domain application, and the effective delay-Doppler channel in both dense
//! (oracle) and matrix-free form.

mod effective;
mod ltv;
mod realization;
mod taps;

pub use effective::{
    build_heff_oracle, extract_pilot_column, extract_pilot_column_dense, DdChannelOperator, EffectiveChannel,
    DEFAULT_ORACLE_CAP,
};
pub use ltv::{apply_ltv, dense_ltv_matrix};
pub use realization::{
    max_doppler_hz, parse_channel_dump, sample_channel, sample_eva_channel, write_channel_dump, ChannelPath,
    ChannelRealization, PowerDelayProfile, SPEED_OF_LIGHT,
};
pub use taps::DelayTimeChannel;
