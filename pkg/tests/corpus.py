"""Fixture corpus: small legacy workflows named after real revival runs.

Each entry carries the legacy document, recorded HTTP responses, optional
seed substitution rules, and the token its output must contain. Entries
are deliberately varied: t2flow and SCUFL, SOAP and REST services, string
constants, shims, line readers, and one diamond-shaped merge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from tests.conftest import FIXTURES
from wfrevive.services import (
    Protocol,
    ResponseAdapter,
    RuleMatch,
    ServiceEndpoint,
    SubstitutionRule,
)

# ---------------------------------------------------------------------------
# XML builders


def _ports(names: list[str]) -> str:
    return "".join(f"<port><name>{n}</name><depth>0</depth></port>" for n in names)


def beanshell(name: str, in_ports: list[str], out_ports: list[str], script: str) -> str:
    return f"""<processor>
      <name>{name}</name>
      <inputPorts>{_ports(in_ports)}</inputPorts>
      <outputPorts>{_ports(out_ports)}</outputPorts>
      <activities><activity>
        <class>net.sf.taverna.t2.activities.beanshell.BeanshellActivity</class>
        <configBean encoding="xstream"><bean><script>{script}</script></bean></configBean>
      </activity></activities>
    </processor>"""


def constant(name: str, out_port: str, value: str) -> str:
    return f"""<processor>
      <name>{name}</name>
      <inputPorts></inputPorts>
      <outputPorts>{_ports([out_port])}</outputPorts>
      <activities><activity>
        <class>net.sf.taverna.t2.activities.stringconstant.StringConstantActivity</class>
        <configBean encoding="xstream"><bean><value>{value}</value></bean></configBean>
      </activity></activities>
    </processor>"""


def soap(name: str, in_ports: list[str], out_ports: list[str], wsdl: str, operation: str) -> str:
    return f"""<processor>
      <name>{name}</name>
      <inputPorts>{_ports(in_ports)}</inputPorts>
      <outputPorts>{_ports(out_ports)}</outputPorts>
      <activities><activity>
        <class>net.sf.taverna.t2.activities.wsdl.WSDLActivity</class>
        <configBean encoding="xstream"><bean><wsdl>{wsdl}</wsdl><operation>{operation}</operation></bean></configBean>
      </activity></activities>
    </processor>"""


def rest(name: str, in_ports: list[str], out_ports: list[str], template: str) -> str:
    return f"""<processor>
      <name>{name}</name>
      <inputPorts>{_ports(in_ports)}</inputPorts>
      <outputPorts>{_ports(out_ports)}</outputPorts>
      <activities><activity>
        <class>net.sf.taverna.t2.activities.rest.RESTActivity</class>
        <configBean encoding="xstream"><bean><urlSignature>{template}</urlSignature></bean></configBean>
      </activity></activities>
    </processor>"""


def link(source: str, sink: str) -> str:
    def end(ref: str, is_sink: bool) -> str:
        if ":" in ref:
            proc, port = ref.split(":", 1)
            return f'<{"sink" if is_sink else "source"} type="processor"><processor>{proc}</processor><port>{port}</port></{"sink" if is_sink else "source"}>'
        return f'<{"sink" if is_sink else "source"} type="dataflow"><port>{ref}</port></{"sink" if is_sink else "source"}>'

    return f"<datalink>{end(sink, True)}{end(source, False)}</datalink>"


def t2flow(
    title: str,
    inputs: list[str],
    outputs: list[str],
    processors: list[str],
    links: list[str],
    examples: dict[str, str] | None = None,
) -> str:
    annotations = "".join(
        f'<annotation class="ExampleValue"><port>{port}</port><value>{value}</value></annotation>'
        for port, value in (examples or {}).items()
    )
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<workflow xmlns="http://taverna.sf.net/2008/xml/t2flow" version="1" producedBy="taverna-2.2.0">
  <dataflow id="top" role="top">
    <name>{title}</name>
    <inputPorts>{_ports(inputs)}</inputPorts>
    <outputPorts>{_ports(outputs)}</outputPorts>
    <annotations>{annotations}</annotations>
    <processors>{''.join(processors)}</processors>
    <conditions />
    <datalinks>{''.join(links)}</datalinks>
  </dataflow>
</workflow>"""


def scufl(
    title: str,
    inputs: list[str],
    outputs: list[str],
    processors: list[str],
    links: list[tuple[str, str]],
) -> str:
    link_xml = "".join(f'<s:link source="{a}" sink="{b}" />' for a, b in links)
    sources = "".join(f'<s:source name="{n}" />' for n in inputs)
    sinks = "".join(f'<s:sink name="{n}" />' for n in outputs)
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<s:scufl xmlns:s="http://org.embl.ebi.escience/xscufl/0.1alpha" version="0.2" log="0">
  <s:workflowdescription title="{title}">{title}</s:workflowdescription>
  {''.join(processors)}
  {link_xml}
  {sources}
  {sinks}
</s:scufl>"""


def scufl_soap(name: str, wsdl: str, operation: str) -> str:
    return f"""<s:processor name="{name}">
    <s:arbitrarywsdl><s:wsdl>{wsdl}</s:wsdl><s:operation>{operation}</s:operation></s:arbitrarywsdl>
  </s:processor>"""


def scufl_beanshell(name: str, script: str) -> str:
    return f"""<s:processor name="{name}">
    <s:beanshell><s:scriptvalue>{script}</s:scriptvalue></s:beanshell>
  </s:processor>"""


READ_LINES = (
    "List lines = new ArrayList();\n"
    'for (String line : text.split("\\n")) {\n'
    "  String t = line.trim();\n"
    "  if (t.length() &gt; 0) lines.add(t);\n"
    "}\n"
    "items = lines;"
)


def seed_rule(
    rule_id: str,
    host_pattern: str,
    op_pattern: str,
    base: str,
    operation: str,
    adapter: ResponseAdapter = ResponseAdapter.NONE,
    probe_args: tuple[tuple[str, str], ...] = (),
) -> dict:
    import re as _re

    return SubstitutionRule(
        rule_id=rule_id,
        match=RuleMatch(host_pattern, op_pattern),
        replacement=ServiceEndpoint(
            Protocol.REST, base, operation, tuple(_re.findall(r"\{(\w+)\}", operation))
        ),
        response_adapter=adapter,
        probe_args=probe_args,
    ).to_dict()


# ---------------------------------------------------------------------------
# Corpus entries


@dataclass(frozen=True)
class CorpusWorkflow:
    slug: str
    title: str
    filename: str
    document: bytes
    http_fixtures: dict
    expect_output_contains: str
    seed_rules: tuple[dict, ...] = ()
    input_text: str | None = None


def _kegg_entry() -> CorpusWorkflow:
    return CorpusWorkflow(
        slug="entrez_gene_to_kegg_pathway",
        title="Entrez Gene to KEGG Pathway-v5",
        filename="entrez_gene_to_kegg_pathway.t2flow",
        document=(FIXTURES / "entrez_gene_to_kegg_pathway.t2flow").read_bytes(),
        http_fixtures=json.loads((FIXTURES / "http" / "kegg.json").read_text()),
        expect_output_contains="hsa05134",
    )


def _fetch_use_from_mets() -> CorpusWorkflow:
    doc = t2flow(
        "Fetch USE from mets",
        inputs=[],
        outputs=["use_value"],
        processors=[
            constant("mets_record_id", "record_id", "mets-8842"),
            rest(
                "fetch_use_section",
                ["record_id"],
                ["use_value"],
                "https://data.mets.example/records/{record_id}",
            ),
        ],
        links=[
            link("mets_record_id:record_id", "fetch_use_section:record_id"),
            link("fetch_use_section:use_value", "use_value"),
        ],
    )
    return CorpusWorkflow(
        slug="fetch_use_from_mets",
        title="Fetch USE from mets",
        filename="fetch_use_from_mets.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://data.mets.example": {"status": 200, "body": "mets record service"},
            "GET https://data.mets.example/records/mets-8842": {
                "status": 200,
                "body": "USE=reference image archive",
            },
        },
        expect_output_contains="reference image archive",
    )


def _combiugi() -> CorpusWorkflow:
    doc = t2flow(
        "Generate CombiUgi library-v1",
        inputs=["reagents"],
        outputs=["library"],
        processors=[
            beanshell("read_reagents", ["text"], ["items"], READ_LINES),
            rest(
                "enumerate_products",
                ["reagent"],
                ["products"],
                "https://compute.ugi.example/combine/{reagent}",
            ),
        ],
        links=[
            link("reagents", "read_reagents:text"),
            link("read_reagents:items", "enumerate_products:reagent"),
            link("enumerate_products:products", "library"),
        ],
        examples={"reagents": "amine-1\nisocyanide-2"},
    )
    return CorpusWorkflow(
        slug="generate_combiugi_library",
        title="Generate CombiUgi library-v1",
        filename="generate_combiugi_library.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://compute.ugi.example": {"status": 200, "body": "ugi compute"},
            "GET https://compute.ugi.example/combine/amine-1": {
                "status": 200,
                "body": "ugi-product-1",
            },
            "GET https://compute.ugi.example/combine/isocyanide-2": {
                "status": 200,
                "body": "ugi-product-2",
            },
        },
        expect_output_contains="ugi-product-1",
    )


def _cas_to_sdf() -> CorpusWorkflow:
    doc = t2flow(
        "Download CAS numbers and save as SD file-v1",
        inputs=["cas_numbers"],
        outputs=["sd_file"],
        processors=[
            beanshell("read_cas_numbers", ["text"], ["items"], READ_LINES),
            rest("download_structures", ["cas"], ["records"], "https://query.chem.example/sdf/{cas}"),
        ],
        links=[
            link("cas_numbers", "read_cas_numbers:text"),
            link("read_cas_numbers:items", "download_structures:cas"),
            link("download_structures:records", "sd_file"),
        ],
        examples={"cas_numbers": "50-00-0"},
    )
    return CorpusWorkflow(
        slug="download_cas_numbers_sdf",
        title="Download CAS numbers and save as SD file-v1",
        filename="download_cas_numbers_sdf.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://query.chem.example": {"status": 200, "body": "chem query service"},
            "GET https://query.chem.example/sdf/50-00-0": {
                "status": 200,
                "body": "formaldehyde\n  V2000\nM  END\n$$$$",
            },
        },
        expect_output_contains="V2000",
    )


def _fetch_pdb() -> CorpusWorkflow:
    return CorpusWorkflow(
        slug="fetch_pdb_flatfile",
        title="Fetch PDB flatfile from RCSB server-v1",
        filename="fetch_pdb_flatfile.xml",
        document=(FIXTURES / "fetch_pdb_flatfile.xml").read_bytes(),
        http_fixtures={
            "GET https://files.rcsb.example/download/1TIM.pdb": {
                "status": 200,
                "body": "HEADER    ISOMERASE  1TIM\nATOM      1  N   ALA A   1",
            },
        },
        seed_rules=(
            seed_rule(
                "rcsb-flatfile-rest",
                "*rcsb.org",
                "*",
                "https://files.rcsb.example",
                "/download/{id}.pdb",
                probe_args=(("id", "1TIM"),),
            ),
        ),
        input_text="1TIM",
        expect_output_contains="HEADER",
    )


def _pdl_interop() -> CorpusWorkflow:
    doc = t2flow(
        "Example of interoperability validation on real time with PDL services-v2",
        inputs=["service_descriptor"],
        outputs=["validation_report"],
        processors=[
            rest(
                "validate_descriptor",
                ["descriptor"],
                ["report"],
                "https://registry.pdl.example/validate/{descriptor}",
            ),
        ],
        links=[
            link("service_descriptor", "validate_descriptor:descriptor"),
            link("validate_descriptor:report", "validation_report"),
        ],
        examples={"service_descriptor": "pdl-echo"},
    )
    return CorpusWorkflow(
        slug="pdl_interoperability_validation",
        title="Example of interoperability validation on real time with PDL services-v2",
        filename="pdl_interoperability_validation.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://registry.pdl.example": {"status": 200, "body": "pdl registry"},
            "GET https://registry.pdl.example/validate/pdl-echo": {
                "status": 200,
                "body": "pdl-echo: interoperable",
            },
        },
        expect_output_contains="interoperable",
    )


def _pdl_rest_services() -> CorpusWorkflow:
    doc = t2flow(
        "Use of rest services described with PDL-v1",
        inputs=[],
        outputs=["response"],
        processors=[
            constant("operation_name", "op", "ping"),
            rest("invoke_service", ["op"], ["response"], "https://services.pdl.example/invoke/{op}"),
        ],
        links=[
            link("operation_name:op", "invoke_service:op"),
            link("invoke_service:response", "response"),
        ],
    )
    return CorpusWorkflow(
        slug="pdl_rest_services",
        title="Use of rest services described with PDL-v1",
        filename="pdl_rest_services.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://services.pdl.example": {"status": 200, "body": "pdl services"},
            "GET https://services.pdl.example/invoke/ping": {"status": 200, "body": "pong"},
        },
        expect_output_contains="pong",
    )


def _analysing_workflows() -> CorpusWorkflow:
    doc = t2flow(
        "Analysing workflows-v3",
        inputs=["workflow_id"],
        outputs=["analysis"],
        processors=[
            rest("fetch_metadata", ["id"], ["meta"], "https://meta.myexp.example/meta/{id}"),
            rest("fetch_statistics", ["id"], ["stats"], "https://meta.myexp.example/stats/{id}"),
            beanshell("combine_report", ["meta", "stats"], ["report"], "report = meta + stats;"),
        ],
        links=[
            link("workflow_id", "fetch_metadata:id"),
            link("workflow_id", "fetch_statistics:id"),
            link("fetch_metadata:meta", "combine_report:meta"),
            link("fetch_statistics:stats", "combine_report:stats"),
            link("combine_report:report", "analysis"),
        ],
        examples={"workflow_id": "wf-204"},
    )
    return CorpusWorkflow(
        slug="analysing_workflows",
        title="Analysing workflows-v3",
        filename="analysing_workflows.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://meta.myexp.example": {"status": 200, "body": "myexperiment meta"},
            "GET https://meta.myexp.example/meta/wf-204": {
                "status": 200,
                "body": "title: pathway analysis",
            },
            "GET https://meta.myexp.example/stats/wf-204": {
                "status": 200,
                "body": "downloads: 118",
            },
        },
        expect_output_contains="downloads",
    )


def _blat_pilot() -> CorpusWorkflow:
    doc = t2flow(
        "DNA sequence analysis pilot - Blat -v2",
        inputs=["sequence"],
        outputs=["hits"],
        processors=[
            beanshell("format_query", ["sequence"], ["query"], 'query = "seq:" + sequence;'),
            rest("run_blat", ["query"], ["hits"], "https://genome.ucsc.example/blat/{query}"),
        ],
        links=[
            link("sequence", "format_query:sequence"),
            link("format_query:query", "run_blat:query"),
            link("run_blat:hits", "hits"),
        ],
        examples={"sequence": "ACGTACGTAA"},
    )
    return CorpusWorkflow(
        slug="dna_blat_pilot",
        title="DNA sequence analysis pilot - Blat -v2",
        filename="dna_blat_pilot.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://genome.ucsc.example": {"status": 200, "body": "blat server"},
            "GET https://genome.ucsc.example/blat/seq:ACGTACGTAA": {
                "status": 200,
                "body": "chr7:127471196-127471206 score=10",
            },
        },
        expect_output_contains="chr7",
    )


def _xpath_votable() -> CorpusWorkflow:
    doc = t2flow(
        "XPath From VOTable-v1",
        inputs=[],
        outputs=["cell_value"],
        processors=[
            constant("table_id", "id", "vot-11"),
            rest("extract_cell", ["id"], ["value"], "https://vao.votable.example/cell/{id}"),
        ],
        links=[
            link("table_id:id", "extract_cell:id"),
            link("extract_cell:value", "cell_value"),
        ],
    )
    return CorpusWorkflow(
        slug="xpath_from_votable",
        title="XPath From VOTable-v1",
        filename="xpath_from_votable.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://vao.votable.example": {"status": 200, "body": "votable service"},
            "GET https://vao.votable.example/cell/vot-11": {"status": 200, "body": "flux=4.2e-3"},
        },
        expect_output_contains="flux",
    )


def _bioaid_disease() -> CorpusWorkflow:
    doc = t2flow(
        "BioAID DiseaseDiscovery RatHumanMouseUniprotFilter",
        inputs=["protein_ids"],
        outputs=["filtered"],
        processors=[
            beanshell("read_protein_ids", ["text"], ["items"], READ_LINES),
            rest(
                "filter_by_species",
                ["accession"],
                ["entries"],
                "https://www.uniprot.example/filter/{accession}",
            ),
        ],
        links=[
            link("protein_ids", "read_protein_ids:text"),
            link("read_protein_ids:items", "filter_by_species:accession"),
            link("filter_by_species:entries", "filtered"),
        ],
        examples={"protein_ids": "P12345"},
    )
    return CorpusWorkflow(
        slug="bioaid_disease_discovery",
        title="BioAID DiseaseDiscovery RatHumanMouseUniprotFilter",
        filename="bioaid_disease_discovery.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://www.uniprot.example": {"status": 200, "body": "uniprot filter"},
            "GET https://www.uniprot.example/filter/P12345": {
                "status": 200,
                "body": "P12345 Homo sapiens kinase",
            },
        },
        expect_output_contains="Homo sapiens",
    )


def _bioaid_protein() -> CorpusWorkflow:
    doc = scufl(
        "BioAID ProteinDiscovery filterOnHumanUniprot perDoc html",
        inputs=["document_id"],
        outputs=["protein_list"],
        processors=[
            scufl_soap(
                "search_documents",
                "http://bioaid.science.uva.example/axis/services/SearchService.wsdl",
                "searchProteins",
            ),
        ],
        links=[
            ("document_id", "search_documents:doc"),
            ("search_documents:proteins", "protein_list"),
        ],
    )
    return CorpusWorkflow(
        slug="bioaid_protein_discovery",
        title="BioAID ProteinDiscovery filterOnHumanUniprot perDoc html",
        filename="bioaid_protein_discovery.xml",
        document=doc.encode(),
        http_fixtures={
            "GET https://search.bioaid.example/docs/doc-1": {
                "status": 200,
                "body": "protein-list: TNF, IL6",
            },
        },
        seed_rules=(
            seed_rule(
                "bioaid-search-rest",
                "*uva.example",
                "*",
                "https://search.bioaid.example",
                "/docs/{doc}",
                probe_args=(("doc", "doc-1"),),
            ),
        ),
        input_text="doc-1",
        expect_output_contains="protein-list",
    )


def _nucleotide_interproscan() -> CorpusWorkflow:
    doc = t2flow(
        "Nucleotide InterProScan-v4",
        inputs=["nucleotide_seq"],
        outputs=["domains"],
        processors=[
            beanshell(
                "to_rna",
                ["nucleotide_seq"],
                ["rna"],
                'rna = nucleotide_seq.replace("T", "U");',
            ),
            rest("scan_domains", ["seq"], ["matches"], "https://www.ebi.example/interproscan/{seq}"),
        ],
        links=[
            link("nucleotide_seq", "to_rna:nucleotide_seq"),
            link("to_rna:rna", "scan_domains:seq"),
            link("scan_domains:matches", "domains"),
        ],
        examples={"nucleotide_seq": "ATGGCC"},
    )
    return CorpusWorkflow(
        slug="nucleotide_interproscan",
        title="Nucleotide InterProScan-v4",
        filename="nucleotide_interproscan.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://www.ebi.example": {"status": 200, "body": "interproscan"},
            "GET https://www.ebi.example/interproscan/AUGGCC": {
                "status": 200,
                "body": "IPR000719 protein kinase domain",
            },
        },
        expect_output_contains="IPR000719",
    )


def _protein_sequence_analysis() -> CorpusWorkflow:
    doc = t2flow(
        "Workflow for Protein Sequence Analysis",
        inputs=["protein_seq"],
        outputs=["families"],
        processors=[
            rest("find_domains", ["seq"], ["domains"], "https://analysis.protein.example/domains/{seq}"),
            rest("lookup_families", ["domain"], ["families"], "https://analysis.protein.example/families/{domain}"),
        ],
        links=[
            link("protein_seq", "find_domains:seq"),
            link("find_domains:domains", "lookup_families:domain"),
            link("lookup_families:families", "families"),
        ],
        examples={"protein_seq": "MKTAYIAK"},
    )
    return CorpusWorkflow(
        slug="protein_sequence_analysis",
        title="Workflow for Protein Sequence Analysis",
        filename="protein_sequence_analysis.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://analysis.protein.example": {"status": 200, "body": "protein analysis"},
            "GET https://analysis.protein.example/domains/MKTAYIAK": {
                "status": 200,
                "body": "dom:PF00069\ndom:PF07714",
            },
            "GET https://analysis.protein.example/families/PF00069": {
                "status": 200,
                "body": "PF00069 protein kinase family",
            },
            "GET https://analysis.protein.example/families/PF07714": {
                "status": 200,
                "body": "PF07714 tyrosine kinase family",
            },
        },
        seed_rules=(
            seed_rule(
                "protein-domains-linelist",
                "analysis.protein.example",
                "/domains/*",
                "https://analysis.protein.example",
                "/domains/{seq}",
                adapter=ResponseAdapter.LINE_LIST,
                probe_args=(("seq", "MKTAYIAK"),),
            ),
        ),
        expect_output_contains="kinase",
    )


def _fetch_pdb_t2flow_variant() -> CorpusWorkflow:
    doc = t2flow(
        "Fetch PDB flatfile from RCSB server-v2",
        inputs=["pdb_id"],
        outputs=["flatfile"],
        processors=[
            rest("fetch_flatfile", ["id"], ["record"], "https://files.rcsb.example/download/{id}.pdb"),
        ],
        links=[
            link("pdb_id", "fetch_flatfile:id"),
            link("fetch_flatfile:record", "flatfile"),
        ],
        examples={"pdb_id": "4HHB"},
    )
    return CorpusWorkflow(
        slug="fetch_pdb_flatfile_v2",
        title="Fetch PDB flatfile from RCSB server-v2",
        filename="fetch_pdb_flatfile_v2.t2flow",
        document=doc.encode(),
        http_fixtures={
            "GET https://files.rcsb.example": {"status": 200, "body": "rcsb file server"},
            "GET https://files.rcsb.example/download/4HHB.pdb": {
                "status": 200,
                "body": "HEADER    OXYGEN TRANSPORT  4HHB",
            },
        },
        expect_output_contains="HEADER",
    )


def corpus() -> list[CorpusWorkflow]:
    return [
        _kegg_entry(),
        _fetch_use_from_mets(),
        _combiugi(),
        _cas_to_sdf(),
        _fetch_pdb(),
        _pdl_interop(),
        _pdl_rest_services(),
        _analysing_workflows(),
        _blat_pilot(),
        _xpath_votable(),
        _bioaid_disease(),
        _bioaid_protein(),
        _nucleotide_interproscan(),
        _protein_sequence_analysis(),
        _fetch_pdb_t2flow_variant(),
    ]


def run_corpus_session(entry: CorpusWorkflow, data_dir: Path):
    """Drive one corpus workflow to completion; returns (engine, session)."""
    from wfrevive.session import RevivalEngine, SessionConfig
    from wfrevive.validation import TransportMode

    data_dir.mkdir(parents=True, exist_ok=True)
    fixtures_file = data_dir / "http_fixtures.json"
    fixtures_file.write_text(json.dumps(entry.http_fixtures, indent=2, sort_keys=True))
    engine = RevivalEngine(data_dir / "engine")
    config = SessionConfig(
        transport=TransportMode.FIXTURE,
        fixtures_path=str(fixtures_file),
        seed_rules=entry.seed_rules,
    )
    session = engine.create(entry.document, filename=entry.filename, config=config)
    if entry.input_text is not None:
        engine.register_input(session, "input.txt", entry.input_text)
    engine.run_to_completion(session, {"plausibility_check": "yes"})
    return engine, session
