//! Two-stage training.
//!
//! Stage one fits the encoder to the encoding loss alone. Stage two seeds
//! centroids with K-means on the learned embedding and then, every epoch,
//! computes soft assignments, refreshes proportions and the self-supervision
//! target, and takes one Adam step on encoding + γ·clustering loss, updating
//! encoder weights and centroids together. The optimizer state carries over
//! from stage one.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clustering::{
    default_proportion_floor, estimate_proportions, hard_assign, kmeans, sdcn_target, sinkhorn_target,
    soft_assign, ClusterState, TransportPlan,
};
use crate::encoder::{adam_step, backward, forward, AdamState, EncoderParams, Gradients};
use crate::error::{Error, Result};
use crate::graph::{
    build_attribute_laplacian, build_normalized_laplacian, AttributedGraph, ImplicitAttributeLaplacian,
    StructureLaplacian,
};
use crate::metrics::ClusteringScores;
use crate::objective::{clustering_loss, encoding_loss, penalty_only_loss, total_loss, EncodingLoss};
use crate::pipeline::config::{ProportionMode, RunConfig};
use crate::pipeline::report::{EncodingRecord, RunReport, TrainRecord};

/// Both Laplacians of a graph, built once per run.
#[derive(Debug, Clone)]
pub struct Laplacians {
    pub structure: StructureLaplacian,
    pub attribute: ImplicitAttributeLaplacian,
}

impl Laplacians {
    pub fn build(graph: &AttributedGraph) -> Result<Self> {
        Ok(Laplacians {
            structure: build_normalized_laplacian(graph)?,
            attribute: build_attribute_laplacian(graph)?,
        })
    }
}

/// Encoder after stage one, with the optimizer state to continue from.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub params: EncoderParams,
    pub optimizer: AdamState,
    pub losses: Vec<EncodingRecord>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub optimizer: AdamState,
    pub cluster_state: ClusterState,
    /// Embedding from the last epoch's forward pass.
    pub embeddings: Array2<f64>,
    pub predictions: Vec<usize>,
    pub report: RunReport,
}

pub fn resolve_clusters(config: &RunConfig, graph: &AttributedGraph) -> Result<usize> {
    let k = config
        .n_clusters
        .or(graph.n_classes())
        .ok_or_else(|| Error::Config("number of clusters unknown: set n_clusters".into()))?;
    if k > graph.n_nodes() {
        return Err(Error::TooManyClusters { k, n: graph.n_nodes() });
    }
    Ok(k)
}

fn kmeans_seed(seed: u64) -> u64 {
    seed.wrapping_add(0x6b6d_6561_6e73)
}

fn encoding_step(config: &RunConfig, laplacians: &Laplacians, h: &ArrayView2<f64>) -> Result<EncodingLoss> {
    let weights = config.loss_weights();
    if config.ablation.no_encoding_trace {
        Ok(penalty_only_loss(h, weights.beta))
    } else {
        encoding_loss(h, &laplacians.structure, &laplacians.attribute, &weights)
    }
}

fn record(epoch: usize, loss: &EncodingLoss) -> EncodingRecord {
    EncodingRecord {
        epoch,
        loss: loss.value,
        structure_term: loss.structure_term,
        attribute_term: loss.attribute_term,
        penalty_term: loss.penalty_term,
    }
}

fn score(config: &RunConfig, graph: &AttributedGraph, pred: &[usize]) -> Result<Option<ClusteringScores>> {
    graph
        .labels()
        .map(|truth| ClusteringScores::evaluate_with(pred, truth, config.nmi_normalization))
        .transpose()
}

/// Fresh encoder and optimizer for a config.
pub fn initialize(config: &RunConfig, graph: &AttributedGraph) -> Result<(EncoderParams, AdamState)> {
    config.validate()?;
    let k = resolve_clusters(config, graph)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = EncoderParams::init(&config.layer_dims(graph.n_features()), k, &mut rng)?;
    let optimizer = AdamState::new(&params, config.learning_rate, config.weight_decay)?;
    Ok((params, optimizer))
}

pub fn pretrain(config: &RunConfig, graph: &AttributedGraph) -> Result<Pretrained> {
    let laplacians = Laplacians::build(graph)?;
    pretrain_with(config, graph, &laplacians)
}

fn pretrain_epoch(
    config: &RunConfig,
    laplacians: &Laplacians,
    params: &EncoderParams,
    x: &ArrayView2<f64>,
    epoch: usize,
) -> Result<(EncodingLoss, Gradients)> {
    let (h, cache) = forward(params, x)?;
    let loss = encoding_step(config, laplacians, &h.view())?;
    if !loss.value.is_finite() {
        return Err(Error::NonFiniteLoss { stage: "pretrain", epoch });
    }
    let grads = backward(params, &cache, &loss.grad.view())?;
    Ok((loss, grads))
}

pub fn pretrain_with(config: &RunConfig, graph: &AttributedGraph, laplacians: &Laplacians) -> Result<Pretrained> {
    let start = Instant::now();
    let (mut params, mut optimizer) = initialize(config, graph)?;
    let x = graph.features().view();
    let mut losses = Vec::with_capacity(config.pretrain_epochs);
    for epoch in 1..=config.pretrain_epochs {
        let (loss, grads) =
            pretrain_epoch(config, laplacians, &params, &x, epoch).map_err(|e| e.at_epoch("pretrain", epoch))?;
        adam_step(&mut params, &mut optimizer, &grads).map_err(|e| e.at_epoch("pretrain", epoch))?;
        log::debug!("pretrain epoch {epoch}: L_GE = {:.6}", loss.value);
        losses.push(record(epoch, &loss));
    }
    Ok(Pretrained {
        params,
        optimizer,
        losses,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

struct EpochResult {
    record: TrainRecord,
    grads: Gradients,
    q: Array2<f64>,
    p_hat: Array2<f64>,
    proportions: Array1<f64>,
    h: Array2<f64>,
    used_sinkhorn: bool,
}

struct ClusterContext<'a> {
    config: &'a RunConfig,
    graph: &'a AttributedGraph,
    laplacians: &'a Laplacians,
    k: usize,
    floor: f64,
}

impl ClusterContext<'_> {
    fn epoch(&self, params: &EncoderParams, fixed_pi: &Array1<f64>, epoch: usize) -> Result<EpochResult> {
        let config = self.config;
        let x = self.graph.features().view();
        let (h, cache) = forward(params, &x)?;
        let q = soft_assign(&h.view(), &params.centroids.view(), config.theta)?;
        let labels = hard_assign(&q.view());
        let proportions = match config.proportions {
            ProportionMode::Fixed => fixed_pi.clone(),
            ProportionMode::PerEpoch => estimate_proportions(&labels, self.k, self.floor),
        };
        let (p_hat, transport) = if config.ablation.sdcn_target {
            (sdcn_target(&q.view()), None)
        } else {
            let TransportPlan {
                plan,
                iterations,
                marginal_error,
            } = sinkhorn_target(&q.view(), &proportions.view(), &config.sinkhorn())?;
            (plan, Some((iterations, marginal_error)))
        };

        let encoding = encoding_step(config, self.laplacians, &h.view())?;
        let (gc_value, grad_q) = clustering_loss(&p_hat.view(), &q.view())?;
        let weights = config.loss_weights();
        let total = total_loss(
            &h.view(),
            &params.centroids.view(),
            config.theta,
            &encoding,
            (gc_value, &grad_q),
            &weights,
        )?;
        if !total.value.is_finite() {
            return Err(Error::NonFiniteLoss { stage: "train", epoch });
        }
        let mut grads = backward(params, &cache, &total.grad_h.view())?;
        grads.centroids = total.grad_centroids;

        let metrics = if config.record_epoch_metrics {
            score(config, self.graph, &labels)?
        } else {
            None
        };
        Ok(EpochResult {
            record: TrainRecord {
                epoch,
                encoding: record(epoch, &encoding),
                clustering_loss: gc_value,
                total_loss: total.value,
                sinkhorn_iterations: transport.map(|t| t.0),
                sinkhorn_residual: transport.map(|t| t.1),
                metrics,
            },
            grads,
            q,
            p_hat,
            proportions,
            h,
            used_sinkhorn: transport.is_some(),
        })
    }
}

/// Stage two, continuing from `pretrained`.
pub fn train(config: &RunConfig, graph: &AttributedGraph, pretrained: Pretrained) -> Result<TrainOutcome> {
    let laplacians = Laplacians::build(graph)?;
    train_with(config, graph, &laplacians, pretrained)
}

pub fn train_with(
    config: &RunConfig,
    graph: &AttributedGraph,
    laplacians: &Laplacians,
    pretrained: Pretrained,
) -> Result<TrainOutcome> {
    config.validate()?;
    let start = Instant::now();
    let k = resolve_clusters(config, graph)?;
    let Pretrained {
        mut params,
        mut optimizer,
        losses: pretrain_losses,
        elapsed_secs,
    } = pretrained;
    if params.centroids.nrows() != k {
        return Err(Error::shape("centroid count", k, params.centroids.nrows()));
    }

    let x = graph.features().view();
    let (h0, _) = forward(&params, &x)?;
    let init = kmeans(&h0.view(), k, config.kmeans_restarts, kmeans_seed(config.seed))?;
    params.centroids.assign(&init.centroids);
    let floor = config.proportion_floor.unwrap_or_else(|| default_proportion_floor(k));
    let initial_pi = estimate_proportions(&init.assignments, k, floor);

    let ctx = ClusterContext {
        config,
        graph,
        laplacians,
        k,
        floor,
    };
    let mut records = Vec::with_capacity(config.train_epochs);
    let mut sinkhorn_calls = 0;
    let mut last: Option<EpochResult> = None;
    for epoch in 1..=config.train_epochs {
        let mut result = ctx
            .epoch(&params, &initial_pi, epoch)
            .map_err(|e| e.at_epoch("train", epoch))?;
        sinkhorn_calls += usize::from(result.used_sinkhorn);
        let grads = std::mem::replace(&mut result.grads, Gradients::zeros_like(&params));
        adam_step(&mut params, &mut optimizer, &grads).map_err(|e| e.at_epoch("train", epoch))?;
        log::debug!(
            "train epoch {epoch}: L_GE = {:.6} L_GC = {:.6} total = {:.6}",
            result.record.encoding.loss,
            result.record.clustering_loss,
            result.record.total_loss
        );
        records.push(result.record.clone());
        last = Some(result);
    }

    let (embeddings, predictions, cluster_state) = match last {
        Some(r) => {
            let predictions = hard_assign(&r.q.view());
            let state = ClusterState {
                centroids: params.centroids.clone(),
                q: r.q,
                p_hat: r.p_hat,
                proportions: r.proportions,
                dof: config.theta,
            };
            (r.h, predictions, state)
        }
        None => {
            let q = soft_assign(&h0.view(), &params.centroids.view(), config.theta)?;
            let state = ClusterState {
                centroids: params.centroids.clone(),
                p_hat: q.clone(),
                q,
                proportions: initial_pi,
                dof: config.theta,
            };
            (h0, init.assignments, state)
        }
    };

    let metrics = score(config, graph, &predictions)?;
    let report = RunReport {
        config: config.clone(),
        seed: config.seed,
        n_nodes: graph.n_nodes(),
        n_clusters: k,
        pretrain: pretrain_losses,
        train: records,
        sinkhorn_calls,
        metrics,
        wall_clock_secs: elapsed_secs + start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome {
        params,
        optimizer,
        cluster_state,
        embeddings,
        predictions,
        report,
    })
}

/// Both stages end to end.
pub fn run(config: &RunConfig, graph: &AttributedGraph) -> Result<TrainOutcome> {
    let laplacians = Laplacians::build(graph)?;
    let pretrained = pretrain_with(config, graph, &laplacians)?;
    train_with(config, graph, &laplacians, pretrained)
}

/// Stage one only, scored by K-means on the learned embedding.
pub fn run_pretrain_only(config: &RunConfig, graph: &AttributedGraph) -> Result<(Pretrained, RunReport)> {
    let k = resolve_clusters(config, graph)?;
    let pretrained = pretrain(config, graph)?;
    let start = Instant::now();
    let (h, _) = forward(&pretrained.params, &graph.features().view())?;
    let km = kmeans(&h.view(), k, config.kmeans_restarts, kmeans_seed(config.seed))?;
    let report = RunReport {
        config: config.clone(),
        seed: config.seed,
        n_nodes: graph.n_nodes(),
        n_clusters: k,
        pretrain: pretrained.losses.clone(),
        train: Vec::new(),
        sinkhorn_calls: 0,
        metrics: score(config, graph, &km.assignments)?,
        wall_clock_secs: pretrained.elapsed_secs + start.elapsed().as_secs_f64(),
    };
    Ok((pretrained, report))
}
