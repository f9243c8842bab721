pub mod evaluate;
pub mod export_plots;
pub mod gen_data;
pub mod simulate;
pub mod train;
