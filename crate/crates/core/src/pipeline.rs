//! End-to-end extraction, fusion and enrollment for one configuration.

use crate::config::Config;
use crate::imaging::{pad_and_block, GrayImage};
use crate::keypoints::{point_feature, HessianParams};
use crate::matching::{MatchConfig, PlainFeatures};
use crate::orientation::{downsample_codes, orientation_map, FusionParams, MfratBank};
use crate::template::{
    fuse, gaussian_bank, iom_hash, iom_hash_streaming, FeatureLayout, FusedFeature, IomParams,
    ProjectionBank, RevocableTemplate,
};
use crate::Error;

#[derive(Debug, Clone)]
pub struct Pipeline {
    config: Config,
    bank: MfratBank,
    fusion: FusionParams,
    hessian: HessianParams,
}

impl Pipeline {
    pub fn new(config: Config) -> Result<Self, Error> {
        config.validate()?;
        let bank = MfratBank::new(config.mfrat_window)?;
        let hessian = HessianParams {
            filter_sizes: config.hessian_sizes.clone(),
            threshold: config.hessian_threshold,
            ..HessianParams::default()
        };
        hessian.validate()?;
        IomParams::new(config.iom_l, config.iom_k, 0, config.mode).validate()?;
        let fusion = FusionParams {
            r: config.fusion_r,
            cyclic_wrap: config.cyclic_wrap,
        };
        Ok(Self {
            config,
            bank,
            fusion,
            hessian,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            w_o: self.config.w_o,
            shift_radius: self.config.shift_radius,
        }
    }

    /// `block_count * (block_size / cell_size)^2` orientation codes, one point code per block.
    pub fn layout(&self) -> FeatureLayout {
        let cells = self.config.block_size / self.config.cell_size;
        FeatureLayout {
            orientation_len: self.config.block_count * cells * cells,
            point_len: self.config.block_count,
            mode: self.config.mode,
            scaled: self.config.segment_scaling,
        }
    }

    pub fn dimension(&self) -> usize {
        self.layout().dimension()
    }

    pub fn iom_params(&self, seed: u64) -> IomParams {
        IomParams::new(self.config.iom_l, self.config.iom_k, seed, self.config.mode)
    }

    /// Materializes the projection bank for `seed`; worth it when hashing many images.
    pub fn projection_bank(&self, seed: u64) -> Result<ProjectionBank, Error> {
        Ok(gaussian_bank(&self.iom_params(seed), self.dimension())?)
    }

    pub fn extract(&self, img: &GrayImage) -> Result<PlainFeatures, Error> {
        let grid = pad_and_block(img, self.config.block_size, self.config.block_count)?;
        let map = orientation_map(grid.image(), &self.bank, &self.fusion);
        let orientation = downsample_codes(&map, self.config.cell_size)?;
        let points = point_feature(&grid, &self.hessian);
        Ok(PlainFeatures { orientation, points })
    }

    pub fn fuse(&self, features: &PlainFeatures) -> Result<FusedFeature, Error> {
        Ok(fuse(&features.orientation, &features.points, &self.layout())?)
    }

    pub fn enroll(&self, img: &GrayImage, seed: u64) -> Result<RevocableTemplate, Error> {
        let c = self.fuse(&self.extract(img)?)?;
        Ok(iom_hash_streaming(&c, &self.iom_params(seed))?)
    }

    pub fn enroll_with_bank(&self, img: &GrayImage, bank: &ProjectionBank) -> Result<RevocableTemplate, Error> {
        let c = self.fuse(&self.extract(img)?)?;
        Ok(iom_hash(&c, bank)?)
    }
}
