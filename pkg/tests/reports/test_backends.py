"""Test the dmlm.reports.backends module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Third Party
import pytest

# dmlm
import dmlm.errors
import dmlm.reports.backends
import dmlm.reports.llm

# =============================================================================
# FIXTURES
# =============================================================================


@pytest.fixture
def template(default_lexicon):
    """A template backend over the default lexicon."""
    return dmlm.reports.backends.TemplateReportBackend(default_lexicon)


@pytest.fixture
def mock_client(mocker):
    """A mocked chat-completion client."""
    client = mocker.MagicMock(spec=dmlm.reports.llm.ChatCompletionClient)
    client.model = "test-model"

    return client


# =============================================================================
# TESTS
# =============================================================================


class TestReportConfig:
    """Test dmlm.reports.backends.ReportConfig."""

    def test_defaults(self):
        """Test the default settings."""
        inst = dmlm.reports.backends.ReportConfig()

        assert inst.backend == "template"
        assert inst.llm_retries == 1

    @pytest.mark.parametrize(
        "changes",
        (
            {"backend": "bogus"},
            {"llm_timeout": 0.0},
            {"llm_retries": -1},
        ),
    )
    def test_validate(self, changes):
        """Test ReportConfig.validate."""
        with pytest.raises(dmlm.errors.ConfigError):
            dmlm.reports.backends.ReportConfig(**changes)


class TestBaseReportBackend:
    """Test dmlm.reports.backends.BaseReportBackend."""

    def test_abstract_methods(self, remove_abstract_methods):
        """Test that the abstract methods return nothing."""
        remove_abstract_methods(dmlm.reports.backends.BaseReportBackend)

        inst = dmlm.reports.backends.BaseReportBackend()

        assert inst.name is None
        assert inst.appearance("edema") is None
        assert inst.definition("edema") is None


class TestTemplateReportBackend:
    """Test dmlm.reports.backends.TemplateReportBackend."""

    # Properties

    def test_name(self, template):
        """Test TemplateReportBackend.name."""
        assert template.name == "template"

    # Methods

    def test_sections(self, template, default_lexicon):
        """Test that sections come from the lexicon."""
        entry = default_lexicon.get("edema")

        assert template.definition("Edema") == entry.definition
        assert template.appearance("Edema") == entry.appearance

    def test_miss(self, template):
        """Test an unknown disease."""
        with pytest.raises(dmlm.errors.LexiconMissError):
            template.definition("nodule")


class TestLLMReportBackend:
    """Test dmlm.reports.backends.LLMReportBackend."""

    def test_name(self, template):
        """Test LLMReportBackend.name."""
        inst = dmlm.reports.backends.LLMReportBackend(None, template)

        assert inst.name == "llm"

    def test_definition(self, template, mock_client):
        """Test that the prefix is stripped and whitespace collapsed."""
        mock_client.complete.return_value = "Definition:  Fluid\n in the lung."

        inst = dmlm.reports.backends.LLMReportBackend(mock_client, template)

        assert inst.definition("edema") == "Fluid in the lung."
        assert not inst.warnings

        mock_client.complete.assert_called_once_with(
            "Define edema. Give me only a single paragraph and short definition of "
            "the disease."
        )

    def test_appearance(self, template, mock_client):
        """Test the appearance prompt."""
        mock_client.complete.return_value = "Radiographic characteristics: Haze."

        inst = dmlm.reports.backends.LLMReportBackend(mock_client, template)

        assert inst.appearance("edema") == "Haze."

    def test_retry(self, template, mock_client):
        """Test that a malformed response is retried."""
        mock_client.complete.side_effect = ["Sure! Here it is.", "Definition: Fluid."]

        inst = dmlm.reports.backends.LLMReportBackend(mock_client, template, retries=1)

        assert inst.definition("edema") == "Fluid."
        assert mock_client.complete.call_count == 2

    def test_fallback(self, template, mock_client, default_lexicon):
        """Test that failures fall back to the template with a warning."""
        mock_client.complete.side_effect = dmlm.errors.LLMEndpointError("timed out")

        inst = dmlm.reports.backends.LLMReportBackend(mock_client, template, retries=2)

        result = inst.definition("edema")

        assert result == default_lexicon.get("edema").definition
        assert mock_client.complete.call_count == 3
        assert inst.warnings == ["timed out; using template text"]

    def test_no_client(self, template, default_lexicon):
        """Test falling back when no endpoint is configured."""
        inst = dmlm.reports.backends.LLMReportBackend(None, template)

        assert inst.appearance("edema") == default_lexicon.get("edema").appearance
        assert len(inst.warnings) == 1

    def test_cache(self, template, mock_client, tmp_path):
        """Test that cached responses skip the endpoint."""
        mock_client.complete.return_value = "Definition: Fluid."
        cache = dmlm.reports.llm.ResponseCache(tmp_path)

        first = dmlm.reports.backends.LLMReportBackend(
            mock_client, template, cache=cache
        )
        second = dmlm.reports.backends.LLMReportBackend(
            mock_client, template, cache=cache
        )

        assert first.definition("edema") == "Fluid."
        assert second.definition("edema") == "Fluid."
        mock_client.complete.assert_called_once()


class Test_build_backend:
    """Test dmlm.reports.backends.build_backend()."""

    def test_template(self, default_lexicon):
        """Test building the template backend."""
        result = dmlm.reports.backends.build_backend(
            dmlm.reports.backends.ReportConfig(), default_lexicon
        )

        assert isinstance(result, dmlm.reports.backends.TemplateReportBackend)

    def test_llm(self, default_lexicon, monkeypatch, tmp_path):
        """Test building the llm backend from the environment."""
        monkeypatch.setenv("DMLM_LLM_ENDPOINT", "http://host/v1")
        monkeypatch.setenv("DMLM_LLM_CACHE", str(tmp_path))

        result = dmlm.reports.backends.build_backend(
            dmlm.reports.backends.ReportConfig(backend="llm", llm_model="m"),
            default_lexicon,
        )

        assert isinstance(result, dmlm.reports.backends.LLMReportBackend)
        assert result._client.model == "m"
        assert result._cache.directory == tmp_path


@pytest.mark.parametrize(
    "finding, expected",
    (
        ("upper left opacity", "Observation: upper left opacity."),
        ("ends with a dot.", "Observation: ends with a dot."),
    ),
)
def test_format_observation(finding, expected):
    """Test dmlm.reports.backends.format_observation()."""
    assert dmlm.reports.backends.format_observation(finding) == expected


def test_format_observation__empty():
    """Test dmlm.reports.backends.format_observation() with an empty finding."""
    with pytest.raises(dmlm.errors.ContractViolationError):
        dmlm.reports.backends.format_observation(" . ")


def test_format_verdict():
    """Test dmlm.reports.backends.format_verdict()."""
    result = dmlm.reports.backends.format_verdict("pleural  effusion")

    assert result == "Verdict: pleural effusion present."


class Test_generate_report:
    """Test dmlm.reports.backends.generate_report()."""

    def test(self, template, default_lexicon):
        """Test a report built from the template backend."""
        result = dmlm.reports.backends.generate_report(
            "edema", ["lower left opacity"], template
        )

        assert result.disease == "edema"
        assert result.definition == default_lexicon.get("edema").definition
        assert result.observations == ("Observation: lower left opacity.",)
        assert result.verdicts == ("Verdict: edema present.",)

    def test_no_findings(self, template):
        """Test that an empty findings list gets a placeholder observation."""
        result = dmlm.reports.backends.generate_report("edema", [], template)

        assert result.observations == (
            dmlm.reports.backends.NO_FINDINGS_OBSERVATION,
        )

    def test_empty_disease(self, template):
        """Test an empty disease name."""
        with pytest.raises(dmlm.errors.ContractViolationError):
            dmlm.reports.backends.generate_report(" ", [], template)

    def test_unknown_disease(self, template):
        """Test a disease missing from the lexicon."""
        with pytest.raises(dmlm.errors.LexiconMissError):
            dmlm.reports.backends.generate_report("nodule", [], template)
